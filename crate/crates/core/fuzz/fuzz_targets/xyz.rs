#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::io::xyz::{parse_xyz, to_xyz_string};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cloud) = parse_xyz(text) {
            let again = parse_xyz(&to_xyz_string(&cloud)).expect("written XYZ parses");
            assert_eq!(again.points, cloud.points);
        }
    }
});
