#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::config::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = PipelineConfig::parse_json(data) {
        assert_eq!(
            PipelineConfig::parse_json(&cfg.to_json()).expect("re-parse written config"),
            cfg
        );
    }
});
