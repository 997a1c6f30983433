#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok((table, _)) = accelctl::io::Table::parse_csv(s) {
            // Whatever parses must survive a write/read cycle.
            let text = table.to_csv(&accelctl::io::config_hash(b"")).unwrap();
            let (back, _) = accelctl::io::Table::parse_csv(&text).unwrap();
            assert_eq!(back, table);
        }
    }
});
