#![no_main]

use kdv2_core::io::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = RunConfig::from_toml_str(text) {
        let _ = c.validate();
        let again = RunConfig::from_toml_str(&c.to_toml_string()).expect("resolved config parses");
        assert_eq!(again.to_toml_string(), c.to_toml_string());
    }
});
