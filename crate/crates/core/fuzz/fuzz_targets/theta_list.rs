#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(list) = accelctl::io::parse_theta_list(s) {
            assert!(!list.is_empty());
            assert!(list.iter().all(|t| t.is_finite() && *t > 0.0));
        }
    }
});
