#![no_main]
use libfuzzer_sys::fuzz_target;
use rowsolve_cli::config::parse_experiment_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_experiment_config(text) {
            let _ = cfg.validate();
        }
    }
});
