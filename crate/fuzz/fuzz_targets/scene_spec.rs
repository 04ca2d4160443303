#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::sim::SceneSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = SceneSpec::parse_json(data) {
        let again = SceneSpec::parse_json(&spec.to_json()).expect("re-parse written spec");
        assert_eq!(again, spec);
    }
});
