#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(raw) = accelegrad::config::RawConfig::parse_str(text) {
            let _ = raw.resolve(Some(0));
        }
    }
});
