#![no_main]

use facemetrics::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = io::decode_utf8(data) else {
        return;
    };
    for id in io::parse_fold_list(text) {
        assert!(!id.is_empty() && id == id.trim());
    }
});
