#![no_main]

use libfuzzer_sys::fuzz_target;
use pumpsim_core::scope;

fuzz_target!(|data: &[u8]| {
    if let Ok(record) = scope::parse(data) {
        let mut buf = Vec::new();
        scope::write(&record.channels, &mut buf).expect("record writes");
    }
});
