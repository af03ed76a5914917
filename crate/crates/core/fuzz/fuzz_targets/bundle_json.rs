#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::pipeline::Bundle;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(bundle) = Bundle::from_json(text) {
            let again = Bundle::from_json(&bundle.to_json()).expect("written bundle loads");
            assert_eq!(again.to_json(), bundle.to_json());
        }
    }
});
