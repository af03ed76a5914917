#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::io::ply::{read_ply, write_ply};

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = read_ply(data) {
        let again = read_ply(&write_ply(&cloud)).expect("written PLY parses");
        assert_eq!(again.points, cloud.points);
    }
});
