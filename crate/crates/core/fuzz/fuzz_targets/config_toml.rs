#![no_main]

use libfuzzer_sys::fuzz_target;
use winbow::pipeline::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = PipelineConfig::from_toml(text) {
            let emitted = cfg.to_toml().expect("parsed config emits");
            assert_eq!(PipelineConfig::from_toml(&emitted).expect("emitted config parses"), cfg);
        }
    }
});
