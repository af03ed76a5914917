#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::matching::DistanceKind;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(kind) = text.parse::<DistanceKind>() {
            let again: DistanceKind = kind.to_string().parse().expect("displayed kind parses");
            assert_eq!(again.to_string(), kind.to_string());
        }
    }
});
