//! Task definitions: XOR and 8x8 handwritten-digit recognition.
//!
//! XOR encodes logical values as phases (`true` = π/2, `false` = -π/2) on two
//! input units and one output unit. The digits task reads the 1797-image
//! 8x8 optical-recognition dataset in its comma-separated text layout (64
//! integer pixels in `[0, 16]` followed by the label per line), splits it
//! per digit class into the first 100 training and next 70 test images, maps
//! pixels linearly onto `[-π/2, π/2]` and one-hot encodes labels as π/2 on
//! the matching output unit and -π/2 elsewhere.

use rand::seq::index::sample as index_sample;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use thiserror::Error;

use crate::model::TrainingSample;
use crate::trainer::BatchSource;

/// Phase encoding of logical true/false.
pub const TRUE_PHASE: f64 = FRAC_PI_2;
pub const FALSE_PHASE: f64 = -FRAC_PI_2;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("invalid task configuration: {0}")]
    Config(String),
}

/// The four canonical XOR samples, in fixed order (FF, FT, TF, TT).
#[derive(Debug, Clone)]
pub struct XorTask {
    samples: Vec<TrainingSample>,
}

impl Default for XorTask {
    fn default() -> Self {
        Self::new()
    }
}

impl XorTask {
    pub fn new() -> Self {
        let enc = |b: bool| if b { TRUE_PHASE } else { FALSE_PHASE };
        let samples = [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .map(|(a, b)| TrainingSample::new(vec![enc(a), enc(b)], vec![enc(a != b)]))
            .collect();
        Self { samples }
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }
}

impl BatchSource for XorTask {
    fn next_batch(&self, _: usize, m_data: usize, _: &mut ChaCha8Rng) -> Vec<TrainingSample> {
        assert_eq!(m_data, 4, "the XOR task always trains on its 4 samples");
        self.samples.clone()
    }
}

/// In-memory digits dataset with its train/test split.
#[derive(Debug, Clone)]
pub struct DigitsDataset {
    /// 64 pixel values in `[0, 16]` per image.
    pub images: Vec<Vec<u8>>,
    /// Labels in `[0, 9]`.
    pub labels: Vec<u8>,
    /// Training indices per digit class: the first (up to) 100 images of each
    /// digit in file order.
    pub train_by_digit: Vec<Vec<usize>>,
    /// Test indices in file order: the next (up to) 70 images of each digit.
    pub test_indices: Vec<usize>,
    /// Digits whose splits were truncated because the file held fewer than
    /// 170 images of them.
    pub warnings: Vec<String>,
}

/// Images per digit reserved for the training split.
pub const TRAIN_PER_DIGIT: usize = 100;
/// Images per digit reserved for the test split.
pub const TEST_PER_DIGIT: usize = 70;

impl DigitsDataset {
    /// Parse a dataset from its text content.
    pub fn parse(content: &str) -> Result<Self, TaskError> {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for (idx, raw_line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 65 {
                return Err(TaskError::Parse {
                    line: line_no,
                    message: format!("expected 65 comma-separated fields, found {}", fields.len()),
                });
            }
            let mut pixels = Vec::with_capacity(64);
            for (col, field) in fields[..64].iter().enumerate() {
                let value: i64 = field.parse().map_err(|_| TaskError::Parse {
                    line: line_no,
                    message: format!("field {} is not an integer: {field:?}", col + 1),
                })?;
                if !(0..=16).contains(&value) {
                    return Err(TaskError::Validation(format!(
                        "line {line_no}: pixel value {value} outside [0, 16]"
                    )));
                }
                pixels.push(value as u8);
            }
            let label: i64 = fields[64].parse().map_err(|_| TaskError::Parse {
                line: line_no,
                message: format!("label is not an integer: {:?}", fields[64]),
            })?;
            if !(0..=9).contains(&label) {
                return Err(TaskError::Validation(format!(
                    "line {line_no}: label {label} outside [0, 9]"
                )));
            }
            images.push(pixels);
            labels.push(label as u8);
        }

        let mut per_digit_seen = vec![0usize; 10];
        let mut train_by_digit = vec![Vec::new(); 10];
        let mut test_indices = Vec::new();
        for (idx, &label) in labels.iter().enumerate() {
            let d = label as usize;
            if per_digit_seen[d] < TRAIN_PER_DIGIT {
                train_by_digit[d].push(idx);
            } else if per_digit_seen[d] < TRAIN_PER_DIGIT + TEST_PER_DIGIT {
                test_indices.push(idx);
            }
            per_digit_seen[d] += 1;
        }
        let mut warnings = Vec::new();
        for (d, &seen) in per_digit_seen.iter().enumerate() {
            if seen < TRAIN_PER_DIGIT + TEST_PER_DIGIT {
                warnings.push(format!(
                    "digit {d}: only {seen} images, split truncated (train {}, test {})",
                    train_by_digit[d].len(),
                    seen.saturating_sub(TRAIN_PER_DIGIT).min(TEST_PER_DIGIT)
                ));
            }
        }

        Ok(Self {
            images,
            labels,
            train_by_digit,
            test_indices,
            warnings,
        })
    }

    pub fn total_len(&self) -> usize {
        self.images.len()
    }

    pub fn train_len(&self) -> usize {
        self.train_by_digit.iter().map(Vec::len).sum()
    }

    pub fn test_len(&self) -> usize {
        self.test_indices.len()
    }

    /// Encoded test split: (input phases, true label) per test image.
    pub fn test_samples(&self) -> Vec<(Vec<f64>, usize)> {
        self.test_indices
            .iter()
            .map(|&idx| {
                (
                    encode_input(&self.images[idx]).expect("stored pixels are validated"),
                    self.labels[idx] as usize,
                )
            })
            .collect()
    }
}

/// Load and split the digits dataset from a file.
pub fn load_digits(path: impl AsRef<Path>) -> Result<DigitsDataset, TaskError> {
    let content = fs::read_to_string(path)?;
    DigitsDataset::parse(&content)
}

/// Map 64 pixel values in `[0, 16]` linearly onto phases in `[-π/2, π/2]`.
pub fn encode_input(pixels: &[u8]) -> Result<Vec<f64>, TaskError> {
    if pixels.len() != 64 {
        return Err(TaskError::Validation(format!(
            "expected 64 pixels, found {}",
            pixels.len()
        )));
    }
    pixels
        .iter()
        .map(|&p| {
            if p > 16 {
                Err(TaskError::Validation(format!(
                    "pixel value {p} outside [0, 16]"
                )))
            } else {
                Ok(PI * (p as f64 / 16.0) - FRAC_PI_2)
            }
        })
        .collect()
}

/// One-hot phase target: π/2 on the labelled output unit, -π/2 elsewhere.
pub fn encode_target(label: usize) -> Result<Vec<f64>, TaskError> {
    if label > 9 {
        return Err(TaskError::Validation(format!(
            "label {label} outside [0, 9]"
        )));
    }
    Ok((0..10)
        .map(|i| if i == label { TRUE_PHASE } else { FALSE_PHASE })
        .collect())
}

/// Interpret output phases as unnormalized class scores `1 + sin φ_i` and
/// return the argmax label with the score vector. Ties break toward the
/// lowest index.
pub fn decode_output(output_phases: &[f64]) -> (usize, Vec<f64>) {
    assert_eq!(output_phases.len(), 10, "expected 10 output phases");
    let scores: Vec<f64> = output_phases.iter().map(|&p| 1.0 + p.sin()).collect();
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    (best, scores)
}

/// Draw a class-balanced batch: `per_digit` images per digit, sampled without
/// replacement from each class's training split.
pub fn sample_batch(
    dataset: &DigitsDataset,
    per_digit: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainingSample>, TaskError> {
    let mut batch = Vec::with_capacity(10 * per_digit);
    for digit in 0..10 {
        let pool = &dataset.train_by_digit[digit];
        if per_digit > pool.len() {
            return Err(TaskError::Config(format!(
                "per_digit = {per_digit} exceeds the {} training images of digit {digit}",
                pool.len()
            )));
        }
        let chosen = index_sample(rng, pool.len(), per_digit);
        for k in chosen.iter() {
            let idx = pool[k];
            batch.push(TrainingSample::new(
                encode_input(&dataset.images[idx])?,
                encode_target(dataset.labels[idx] as usize)?,
            ));
        }
    }
    Ok(batch)
}

/// Batch source over the digits training split.
pub struct DigitsBatches<'a> {
    dataset: &'a DigitsDataset,
}

impl<'a> DigitsBatches<'a> {
    pub fn new(dataset: &'a DigitsDataset) -> Self {
        Self { dataset }
    }
}

impl BatchSource for DigitsBatches<'_> {
    fn next_batch(&self, _: usize, m_data: usize, rng: &mut ChaCha8Rng) -> Vec<TrainingSample> {
        assert!(
            m_data % 10 == 0,
            "digits batches are class-balanced; m_data must be a multiple of 10"
        );
        sample_batch(self.dataset, m_data / 10, rng).expect("batch sampling failed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn xor_truth_table() {
        let task = XorTask::new();
        assert_eq!(task.samples().len(), 4);
        for s in task.samples() {
            let a = s.input_phases[0] > 0.0;
            let b = s.input_phases[1] > 0.0;
            let out = s.target_phases[0] > 0.0;
            assert_eq!(out, a != b);
        }
    }

    fn synthetic_file(per_digit: usize) -> String {
        let mut out = String::new();
        for i in 0..per_digit {
            for d in 0..10u8 {
                let pixel = (i % 17) as u8;
                let mut fields: Vec<String> = vec![pixel.to_string(); 64];
                fields.push(d.to_string());
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
        out
    }

    #[test]
    fn parse_and_split_synthetic_dataset() {
        let ds = DigitsDataset::parse(&synthetic_file(180)).unwrap();
        assert_eq!(ds.total_len(), 1800);
        assert_eq!(ds.train_len(), 1000);
        assert_eq!(ds.test_len(), 700);
        assert!(ds.warnings.is_empty());
        for pool in &ds.train_by_digit {
            assert_eq!(pool.len(), 100);
        }
    }

    #[test]
    fn split_truncation_emits_warning() {
        let ds = DigitsDataset::parse(&synthetic_file(120)).unwrap();
        assert_eq!(ds.train_len(), 1000);
        assert_eq!(ds.test_len(), 200);
        assert_eq!(ds.warnings.len(), 10);
    }

    #[test]
    fn short_row_is_a_parse_error_with_line_number() {
        let mut content = synthetic_file(1);
        content.push_str("1,2,3\n");
        match DigitsDataset::parse(&content) {
            Err(TaskError::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_values_are_validation_errors() {
        let mut fields = vec!["17".to_string(); 64];
        fields.push("3".to_string());
        assert!(matches!(
            DigitsDataset::parse(&fields.join(",")),
            Err(TaskError::Validation(_))
        ));
        let mut fields = vec!["4".to_string(); 64];
        fields.push("10".to_string());
        assert!(matches!(
            DigitsDataset::parse(&fields.join(",")),
            Err(TaskError::Validation(_))
        ));
    }

    #[test]
    fn input_encoding_endpoints() {
        let mut pixels = vec![0u8; 64];
        pixels[1] = 16;
        pixels[2] = 8;
        let phases = encode_input(&pixels).unwrap();
        assert!((phases[0] - (-FRAC_PI_2)).abs() < 1e-15);
        assert!((phases[1] - FRAC_PI_2).abs() < 1e-15);
        assert!(phases[2].abs() < 1e-15);
    }

    #[test]
    fn target_encoding_and_bounds() {
        let t = encode_target(3).unwrap();
        for (i, &p) in t.iter().enumerate() {
            if i == 3 {
                assert_eq!(p, TRUE_PHASE);
            } else {
                assert_eq!(p, FALSE_PHASE);
            }
        }
        assert_eq!(encode_target(0).unwrap()[0], TRUE_PHASE);
        assert!(encode_target(10).is_err());
    }

    #[test]
    fn decode_round_trip_and_ties() {
        for label in 0..10 {
            let (decoded, scores) = decode_output(&encode_target(label).unwrap());
            assert_eq!(decoded, label);
            assert!((scores[label] - 2.0).abs() < 1e-12);
        }
        let (tie, _) = decode_output(&[0.25; 10]);
        assert_eq!(tie, 0);
    }

    #[test]
    fn decode_matches_direct_scan() {
        let phases = [0.1, 1.2, -0.3, 2.9, -1.4, 0.0, 0.77, -2.2, 1.05, 0.4];
        let (label, scores) = decode_output(&phases);
        let direct = (0..10)
            .max_by(|&a, &b| {
                (1.0 + phases[a].sin())
                    .partial_cmp(&(1.0 + phases[b].sin()))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(label, direct);
        assert_eq!(scores.len(), 10);
    }

    #[test]
    fn batches_are_balanced_and_deterministic() {
        let ds = DigitsDataset::parse(&synthetic_file(180)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch = sample_batch(&ds, 30, &mut rng).unwrap();
        assert_eq!(batch.len(), 300);
        let mut rng2 = ChaCha8Rng::seed_from_u64(9);
        let again = sample_batch(&ds, 30, &mut rng2).unwrap();
        assert_eq!(batch, again);

        let mut rng3 = ChaCha8Rng::seed_from_u64(10);
        let tiny = sample_batch(&ds, 1, &mut rng3).unwrap();
        assert_eq!(tiny.len(), 10);
        assert!(sample_batch(&ds, 101, &mut rng3).is_err());
    }
}
