#![no_main]
use accelctl::geometry::Domain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        for domain in [Domain::Interval, Domain::HalfLine, Domain::Ball { radius: 1.0 }] {
            if let Ok(cloud) = accelctl::io::read_cloud(s, &domain) {
                assert!(!cloud.is_empty());
                assert!(cloud.weights().iter().all(|w| *w >= 0.0));
            }
        }
    }
});
