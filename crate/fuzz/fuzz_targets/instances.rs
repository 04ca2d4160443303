#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::cluster::InstanceSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = InstanceSet::parse_json(data) {
        let again = InstanceSet::parse_json(&set.to_json()).expect("re-parse written instances");
        assert_eq!(again, set);
    }
});
