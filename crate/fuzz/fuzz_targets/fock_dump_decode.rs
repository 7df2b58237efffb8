#![no_main]

use libfuzzer_sys::fuzz_target;
use qepi::fock::{decode_dump, encode_dump};

fuzz_target!(|data: &[u8]| {
    if let Ok(rho) = decode_dump(data) {
        assert_eq!(encode_dump(&rho), data);
    }
});
