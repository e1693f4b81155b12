#![no_main]

use facemetrics::io::{self, CurveFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = io::decode_utf8(data) else {
        return;
    };
    if let Ok(doc) = io::parse_curve_json(text) {
        let once = io::write_curve_document(&doc, CurveFormat::Json);
        let again = io::parse_curve_json(&once).expect("written curves parse");
        assert_eq!(io::write_curve_document(&again, CurveFormat::Json), once);
    }
});
