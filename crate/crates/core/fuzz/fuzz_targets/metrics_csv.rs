#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::eval::{metrics_from_csv, metrics_to_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(reports) = metrics_from_csv(text) {
            let written = metrics_to_csv(&reports);
            assert_eq!(metrics_from_csv(&written).expect("written CSV parses"), reports);
        }
    }
});
