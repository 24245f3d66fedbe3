#![no_main]
use libfuzzer_sys::fuzz_target;
use rowsolve::oracle::parse_oracle_document;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(doc) = parse_oracle_document(text) {
            let _ = doc.into_report();
        }
    }
});
