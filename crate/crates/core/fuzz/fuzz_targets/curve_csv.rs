#![no_main]

use facemetrics::io::{self, CurveFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = io::decode_utf8(data) else {
        return;
    };
    if let Ok(doc) = io::parse_curve_csv(text) {
        // Writing is canonical: a second pass reproduces the first.
        let once = io::write_curve_document(&doc, CurveFormat::Csv);
        let again = io::parse_curve_csv(&once).expect("written curves parse");
        assert_eq!(io::write_curve_document(&again, CurveFormat::Csv), once);
    }
});
