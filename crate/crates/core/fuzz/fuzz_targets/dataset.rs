#![no_main]

use facemetrics::io;
use facemetrics::metrics::{self, EvalOptions, RocKind};
use libfuzzer_sys::fuzz_target;

// Input: ground-truth region list, a NUL byte, detection region list.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        return;
    };
    let (Ok(gt), Ok(det)) = (
        io::decode_utf8(&data[..split]),
        io::decode_utf8(&data[split + 1..]),
    ) else {
        return;
    };
    let (Ok(gt), Ok(det)) = (io::parse_region_list(gt), io::parse_region_list(det)) else {
        return;
    };
    let Ok(ds) = io::build_dataset(&gt, &det) else {
        return;
    };
    if ds.num_detections() > 64 {
        return;
    }
    let opts = EvalOptions {
        ellipse_vertices: 16,
        ..EvalOptions::default()
    };
    for kind in [RocKind::Discrete, RocKind::Continuous, RocKind::Normalized] {
        if let Ok(curve) = metrics::roc_curve(&ds, kind, &opts) {
            assert!(curve.validate().is_ok());
        }
    }
});
