#![no_main]

use contact_hj_lab::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        // anything accepted must survive a round trip; compare the text so
        // NaN fields do not trip PartialEq
        let once = cfg.to_toml_string();
        let again = ExperimentConfig::from_toml_str(&once).expect("serialised config rejected");
        assert_eq!(again.to_toml_string(), once);
    }
});
