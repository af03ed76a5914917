#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::codebook::Codebook;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(book) = Codebook::from_json(text) {
            let again = Codebook::from_json(&book.to_json()).expect("written codebook loads");
            assert_eq!(again.checksum(), book.checksum());
        }
    }
});
