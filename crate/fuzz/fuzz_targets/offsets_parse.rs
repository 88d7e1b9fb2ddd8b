#![no_main]

use libfuzzer_sys::fuzz_target;
use pumpsim_core::signal::{parse_offsets_deg, PhaseSchedule, Shape};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(offsets) = parse_offsets_deg(text) {
        if let Ok(schedule) = PhaseSchedule::new(160.0, 60.0, Shape::Sine, offsets) {
            assert_eq!(schedule.reverse().reverse(), schedule);
            let _ = schedule.phase_state(0.0);
        }
    }
});
