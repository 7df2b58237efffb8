#![no_main]

use libfuzzer_sys::fuzz_target;
use qepi::symplectic::GaussianState;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(state) = GaussianState::from_json(text) {
        // Anything accepted must survive a round trip.
        let back = GaussianState::from_json(&state.to_json().unwrap()).unwrap();
        assert_eq!(back.modes(), state.modes());
        let _ = state.entropy();
    }
});
