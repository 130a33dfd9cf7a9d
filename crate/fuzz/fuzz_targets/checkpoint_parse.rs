//! Fuzz the checkpoint text parser.
//!
//! Arbitrary bytes must never panic the parser; parse errors are expected.
//! Any document that parses must survive a serialize/parse round trip
//! value-exactly.
//!
//! Run with: `cargo +nightly fuzz run checkpoint_parse`

#![no_main]
use libfuzzer_sys::fuzz_target;

use kuramoto_ep::checkpoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((topology, params)) = checkpoint::parse(text) {
        let rendered = checkpoint::to_string(&topology, &params);
        let (topology2, params2) =
            checkpoint::parse(&rendered).expect("round trip must parse");
        assert_eq!(topology, topology2, "round trip must preserve the topology");
        assert_eq!(params, params2, "round trip must preserve the parameters");
    }
});
