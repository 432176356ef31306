#![no_main]

use libfuzzer_sys::fuzz_target;
use rotwave_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_json_str(text) {
        // A validated config must survive a round trip unchanged.
        let back = RunConfig::from_json_str(&cfg.to_json_pretty()).expect("round trip");
        assert_eq!(back, cfg);
    }
});
