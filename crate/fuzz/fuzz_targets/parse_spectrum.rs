#![no_main]
use libfuzzer_sys::fuzz_target;
use rowsolve::problem::Spectrum;

fuzz_target!(|data: (&str, u8)| {
    let (text, n) = data;
    if let Ok(s) = text.parse::<Spectrum>() {
        if let Ok(values) = s.values(n as usize) {
            assert!(values.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }
});
