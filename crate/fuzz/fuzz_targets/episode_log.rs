#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::pipeline::EpisodeLog;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = EpisodeLog::from_jsonl(data) {
        let again = EpisodeLog::from_jsonl(&log.to_jsonl()).expect("re-parse written log");
        assert_eq!(again.iterations, log.iterations);
        assert_eq!(again.grasps.len(), log.grasps.len());
    }
});
