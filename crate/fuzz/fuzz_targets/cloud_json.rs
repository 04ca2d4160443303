#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::io::{parse_cloud_json, write_cloud_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = parse_cloud_json(data) {
        let again = parse_cloud_json(&write_cloud_json(&cloud)).expect("re-parse written cloud");
        assert_eq!(again.positions(), cloud.positions());
    }
});
