#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::segment::{binarize_scores, parse_scores, predict_foreground};

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    if let Ok(scores) = parse_scores(rest, n as usize) {
        assert_eq!(scores.len(), n as usize);
        let mask = predict_foreground(&binarize_scores(&scores));
        assert_eq!(mask.len(), scores.len());
    }
});
