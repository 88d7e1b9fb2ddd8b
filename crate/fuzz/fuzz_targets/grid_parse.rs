#![no_main]

use libfuzzer_sys::fuzz_target;
use pumpsim_core::sweep::Grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = text.parse::<Grid>() {
        assert!(!grid.is_empty());
        assert!(grid.values().iter().all(|v| v.is_finite()));
        let again: Grid = grid.to_string().parse().expect("displayed grid parses");
        assert_eq!(again, grid);
    }
});
