//! Fuzz experiment-config parsing and resolution.
//!
//! Arbitrary bytes fed through the TOML loader and the resolver must never
//! panic; parse and validation errors are the expected outcome.
//!
//! Run with: `cargo +nightly fuzz run config_parse`

#![no_main]
use libfuzzer_sys::fuzz_target;

use kuramoto_ep_cli::config::{resolve, ConfigFile, Overrides};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = toml::from_str::<ConfigFile>(text) else {
        return;
    };
    let _ = resolve(file, &Overrides::default());
});
