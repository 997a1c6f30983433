#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(tr) = accelctl::io::read_trajectory(s) {
            assert_eq!(tr.dynamics_residual(), 0.0);
        }
    }
});
