//! Fuzz the digits dataset parser.
//!
//! Arbitrary bytes must produce either a dataset or a parse/validation
//! error, never a panic. Parsed datasets must satisfy the split invariants.
//!
//! Run with: `cargo +nightly fuzz run digits_parse`

#![no_main]
use libfuzzer_sys::fuzz_target;

use kuramoto_ep::tasks::DigitsDataset;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(dataset) = DigitsDataset::parse(text) {
        assert_eq!(dataset.images.len(), dataset.labels.len());
        assert!(dataset.train_len() + dataset.test_len() <= dataset.total_len());
        for pool in &dataset.train_by_digit {
            assert!(pool.len() <= 100);
        }
        for image in &dataset.images {
            assert_eq!(image.len(), 64);
        }
    }
});
