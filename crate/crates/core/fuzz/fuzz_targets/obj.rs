#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::model_ingest::{parse_obj, to_obj_string};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(mesh) = parse_obj(&text) {
        let again = parse_obj(&to_obj_string(&mesh)).expect("written OBJ parses");
        assert_eq!(again.faces, mesh.faces);
    }
});
