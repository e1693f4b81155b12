use std::process::ExitCode;

fn main() -> ExitCode {
    facemetrics::cli::main_with_args(std::env::args_os())
}
