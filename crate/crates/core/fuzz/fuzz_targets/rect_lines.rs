#![no_main]

use facemetrics::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = io::decode_utf8(data) else {
        return;
    };
    if let Ok(rects) = io::parse_rect_lines(text) {
        let written = io::write_rect_lines(&rects);
        assert_eq!(io::parse_rect_lines(&written).as_ref(), Ok(&rects));
    }
});
