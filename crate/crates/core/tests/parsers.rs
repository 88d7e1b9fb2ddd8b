use std::path::Path;

use proptest::prelude::*;
use pumpsim_core::config::ConfigFile;
use pumpsim_core::scope;
use pumpsim_core::signal::parse_offsets_deg;
use pumpsim_core::sweep::Grid;

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.into_iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn fuzz_seeds_replay_cleanly() {
    let mut accepted = 0;
    for seed in corpus("config_parse") {
        if let Ok(doc) = ConfigFile::from_toml_str(std::str::from_utf8(&seed).unwrap()) {
            let again = ConfigFile::from_toml_str(&doc.to_toml_string()).unwrap();
            assert_eq!(again.hash(), doc.hash());
            accepted += 1;
        }
    }
    for seed in corpus("scope_parse") {
        accepted += usize::from(scope::parse(seed.as_slice()).is_ok());
    }
    for seed in corpus("grid_parse") {
        if let Ok(g) = std::str::from_utf8(&seed).unwrap().parse::<Grid>() {
            assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
            accepted += 1;
        }
    }
    for seed in corpus("offsets_parse") {
        accepted += usize::from(parse_offsets_deg(std::str::from_utf8(&seed).unwrap()).is_ok());
    }
    assert!(accepted >= 6);
}

proptest! {
    #[test]
    fn grid_text_never_panics(s in "[0-9eE:,. +-]{0,24}") {
        if let Ok(g) = s.parse::<Grid>() {
            prop_assert!(!g.is_empty());
            prop_assert!(g.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn offsets_text_never_panics(s in "[0-9,. -]{0,20}") {
        if let Ok(offsets) = parse_offsets_deg(&s) {
            prop_assert!(offsets.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn scope_bytes_never_panic(body in prop::collection::vec("[0-9.,e-]{0,40}", 0..8)) {
        let text = format!("t_s,vl1_V,ve1_V,vl2_V,ve2_V,vl3_V,ve3_V\n{}", body.join("\n"));
        let _ = scope::parse_str(&text);
    }

    #[test]
    fn config_text_never_panics(s in "(schema = 1\n)?(\\[(stack|schedule|sweep|pump)\\]\n)?([a-z_]{1,12} = [0-9.\"]{1,6}\n){0,4}") {
        let _ = ConfigFile::from_toml_str(&s);
    }
}
