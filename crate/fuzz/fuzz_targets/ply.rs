#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::io::{parse_ply_with_encoding, write_ply};

fuzz_target!(|data: &[u8]| {
    if let Ok((cloud, encoding)) = parse_ply_with_encoding(data) {
        // anything we accept must survive our own writer
        let again = parse_ply_with_encoding(&write_ply(&cloud, encoding)).expect("re-parse written cloud");
        assert_eq!(again.0.len(), cloud.len());
        assert_eq!(again.0.gt_instance(), cloud.gt_instance());
    }
});
