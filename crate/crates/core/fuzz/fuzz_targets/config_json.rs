#![no_main]
use accelctl::config::*;
use accelctl::geometry::Domain;
use accelctl::mfg::MfgConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = parse::<Domain>(s) {
        let _ = d.validate();
    }
    if let Ok(c) = parse::<AuxCostConfig>(s) {
        let _ = c.validate();
    }
    if let Ok(c) = parse::<PointsConfig>(s) {
        let _ = c.params();
    }
    if let Ok(c) = parse::<ValueGridConfig>(s) {
        let _ = c.params();
    }
    if let Ok(c) = parse::<HjbResidualConfig>(s) {
        let _ = c.params();
    }
    if let Ok(c) = parse::<OracleConfig>(s) {
        let _ = c.settings();
    }
    if let Ok(c) = parse::<TrajectoryConfig>(s) {
        let _ = c.params().and_then(|_| c.settings());
    }
    if let Ok(c) = parse::<AsymptoticsConfig>(s) {
        let _ = c.params();
    }
    if let Ok(c) = parse::<NdSingularityConfig>(s) {
        let _ = c.params().and_then(|_| c.settings());
    }
    if let Ok(c) = parse::<MfgConfig>(s) {
        let _ = c.validate().and_then(|_| c.setup());
    }
});
