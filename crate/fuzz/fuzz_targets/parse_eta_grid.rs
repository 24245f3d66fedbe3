#![no_main]
use libfuzzer_sys::fuzz_target;
use rowsolve_cli::config::parse_eta_grid;

fuzz_target!(|data: &str| {
    if let Ok(grid) = parse_eta_grid(data) {
        let etas: Vec<f64> = grid.candidates();
        assert!(etas.windows(2).all(|w| w[0] < w[1]));
    }
});
