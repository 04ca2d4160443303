#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::score::parse_scored_json;

fuzz_target!(|data: &[u8]| {
    let _ = parse_scored_json(data);
});
