#![no_main]

use accelegrad::trace::Trace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(trace) = Trace::from_csv_str(text) {
            let back = Trace::from_csv_str(&trace.to_csv_string()).expect("round trip");
            assert_eq!(back, trace);
        }
    }
});
