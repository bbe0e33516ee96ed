#![no_main]

use libfuzzer_sys::fuzz_target;
use subradiance_cli::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = parse_config(text) else {
        return;
    };
    // Accepted documents survive a serialize/parse round trip, and semantic
    // validation reports errors instead of panicking.
    let again = parse_config(&serde_json::to_string(&cfg).unwrap()).expect("round trip parses");
    assert_eq!(format!("{cfg:?}"), format!("{again:?}"));
    let _ = cfg.model();
    if let Some(spec) = &cfg.sweep {
        let _ = spec.validate();
    }
});
