#![no_main]

use libfuzzer_sys::fuzz_target;
use xgrasp::grasp::{to_robot_frame, CalibrationExtrinsics};

fuzz_target!(|data: &[u8]| {
    if let Ok(calib) = CalibrationExtrinsics::parse_json(data) {
        let p = [0.1, -0.2, 0.3];
        let back = calib.to_sensor_frame(to_robot_frame(p, &calib));
        if calib.translation().iter().all(|t| t.abs() < 1e6) {
            assert!((0..3).all(|k| (back[k] - p[k]).abs() < 1e-3));
        }
    }
});
