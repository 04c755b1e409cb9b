#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(problem) = accelegrad::problems::decode_problem(data) {
        // The encoding is canonical: anything that decodes must re-encode
        // to the identical bytes.
        let encoded = accelegrad::problems::encode_problem(&problem).expect("decoded is dense");
        assert_eq!(encoded, data);
    }
});
