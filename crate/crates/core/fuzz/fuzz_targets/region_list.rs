#![no_main]

use facemetrics::io::{self, AngleUnit, ParseOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = io::decode_utf8(data) else {
        return;
    };
    let degrees = ParseOptions {
        angle_unit: AngleUnit::Degrees,
    };
    let _ = io::parse_region_list_with(text, &degrees);
    if let Ok(file) = io::parse_region_list(text) {
        let written = io::write_region_list(&file);
        assert_eq!(io::parse_region_list(&written).as_ref(), Ok(&file));
    }
});
