#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::score::parse_feature_scores;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = parse_feature_scores(data) {
        assert!(v.iter().all(|s| (0.0..=1.0).contains(s)));
    }
});
