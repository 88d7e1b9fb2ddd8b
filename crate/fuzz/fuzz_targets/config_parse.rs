#![no_main]

use libfuzzer_sys::fuzz_target;
use pumpsim_core::config::ConfigFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(doc) = ConfigFile::from_toml_str(text) {
        let again = ConfigFile::from_toml_str(&doc.to_toml_string()).expect("written config parses");
        assert_eq!(again.hash(), doc.hash());
    }
});
