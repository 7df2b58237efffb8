#![no_main]

use libfuzzer_sys::fuzz_target;
use qepi::cli::RunConfig;

// Arguments are NUL-separated.
fuzz_target!(|data: &[u8]| {
    let args = std::iter::once("qepi".to_string())
        .chain(data.split(|&b| b == 0).map(|a| String::from_utf8_lossy(a).into_owned()));
    let _ = RunConfig::from_args(args);
});
