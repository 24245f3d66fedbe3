#![no_main]
use libfuzzer_sys::fuzz_target;
use rowsolve::problem::{format_matrix_csv, parse_matrix_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_matrix_csv(text) {
        let out = format_matrix_csv(&m);
        let again = parse_matrix_csv(&out).expect("formatted matrix parses");
        assert_eq!(format_matrix_csv(&again), out);
    }
});
