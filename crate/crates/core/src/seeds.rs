//! Deterministic seed derivation.
//!
//! All randomness in a run flows from one master seed. Sub-streams (parameter
//! initialization, batch sampling, per-iteration phase initialization,
//! evaluation) and replicate seeds are derived with a SplitMix64 step so that
//! streams stay decorrelated and runs reproduce exactly.

/// One SplitMix64 output for the given state.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream/replicate index.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

/// Well-known stream indices used by the trainer and the CLI.
pub mod stream {
    pub const PARAMS: u64 = 1;
    pub const BATCH: u64 = 2;
    pub const INIT: u64 = 3;
    pub const EVAL: u64 = 4;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_deterministic_and_spread() {
        assert_eq!(derive(7, 0), derive(7, 0));
        assert_ne!(derive(7, 0), derive(7, 1));
        assert_ne!(derive(7, 0), derive(8, 0));
        // zero seed must not collapse the stream
        assert_ne!(derive(0, 0), 0);
        assert_ne!(derive(0, 0), derive(0, 1));
    }
}
