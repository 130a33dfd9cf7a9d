//! Evaluation metrics: mean distance, classification accuracy, confusion
//! matrices and learning-speed regression.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

use crate::dynamics::{relax, IntegratorConfig};
use crate::energy::{distance, LOG_CLAMP_EPS};
use crate::model::{ModelParameters, PhaseConfiguration};
use crate::tasks::decode_output;
use crate::topology::NetworkTopology;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("learning-speed window of {window} needs at least {window} records, found {actual}")]
    WindowTooShort { window: usize, actual: usize },
}

/// Arithmetic mean of the distance D over (output, target) pairs.
pub fn mean_distance<'a>(
    results: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (out, target) in results {
        sum += distance(out, target);
        count += 1;
    }
    assert!(count > 0, "mean_distance over an empty list");
    sum / count as f64
}

/// Row-indexed by true digit, column-indexed by predicted digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class][predicted] += 1;
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Fraction of diagonal entries; equals classification accuracy.
    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        correct as f64 / self.total() as f64
    }

    /// Row-normalized view; rows with no samples stay all-zero and are
    /// reported separately.
    pub fn normalized(&self) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut zero_rows = Vec::new();
        let rows = self
            .counts
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let total: usize = row.iter().sum();
                if total == 0 {
                    zero_rows.push(r);
                    vec![0.0; row.len()]
                } else {
                    row.iter().map(|&c| c as f64 / total as f64).collect()
                }
            })
            .collect();
        (rows, zero_rows)
    }

    /// Comma-separated block with an iteration header, one row per true class.
    pub fn to_csv_block(&self, iteration: usize) -> String {
        let mut out = String::new();
        writeln!(out, "# iteration {iteration}").unwrap();
        for row in &self.counts {
            let line: Vec<String> = row.iter().map(usize::to_string).collect();
            writeln!(out, "{}", line.join(",")).unwrap();
        }
        out
    }
}

/// Outcome of a test-set evaluation.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Relaxations that failed outright; these count as incorrect.
    pub failed_relaxations: usize,
    pub non_converged: usize,
}

/// Classify every test sample by relaxing the free dynamics from one random
/// initialization per sample (hidden and output phases uniform, inputs
/// clamped) and decoding the output phases.
///
/// With `m_init > 1` the score vectors of the initializations are averaged
/// before the argmax.
pub fn evaluate_accuracy(
    params: &ModelParameters,
    topology: &NetworkTopology,
    test_samples: &[(Vec<f64>, usize)],
    integrator: &IntegratorConfig,
    rng: &mut ChaCha8Rng,
    m_init: usize,
) -> EvalOutcome {
    assert!(m_init >= 1);
    assert_eq!(topology.n_outputs(), 10, "digit evaluation needs 10 outputs");
    let n = topology.n_units();
    let n_in = topology.n_inputs();

    // Pre-draw every initialization in sample order so parallel evaluation
    // consumes the RNG stream deterministically.
    let inits: Vec<Vec<PhaseConfiguration>> = test_samples
        .iter()
        .map(|(inputs, _)| {
            (0..m_init)
                .map(|_| {
                    let mut phases = vec![0.0; n];
                    phases[..n_in].copy_from_slice(inputs);
                    for p in phases[n_in..].iter_mut() {
                        *p = rng.random_range(-PI..PI);
                    }
                    PhaseConfiguration::new(phases)
                })
                .collect()
        })
        .collect();

    struct PerSample {
        predicted: Option<usize>,
        failed: usize,
        non_converged: usize,
    }

    let outcomes: Vec<PerSample> = test_samples
        .par_iter()
        .zip(inits.par_iter())
        .map(|((inputs, _), sample_inits)| {
            let mut scores = vec![0.0f64; 10];
            let mut successes = 0usize;
            let mut failed = 0usize;
            let mut non_converged = 0usize;
            for init in sample_inits {
                match relax(init, params, topology, 0.0, None, integrator, inputs) {
                    Ok(result) => {
                        if !result.converged {
                            non_converged += 1;
                        }
                        let (_, s) = decode_output(result.phases.output_phases(topology));
                        for (acc, v) in scores.iter_mut().zip(&s) {
                            *acc += v;
                        }
                        successes += 1;
                    }
                    Err(_) => failed += 1,
                }
            }
            let predicted = (successes > 0).then(|| {
                let mut best = 0usize;
                for (i, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = i;
                    }
                }
                best
            });
            PerSample {
                predicted,
                failed,
                non_converged,
            }
        })
        .collect();

    let mut confusion = ConfusionMatrix::new(10);
    let mut correct = 0usize;
    let mut failed = 0usize;
    let mut non_converged = 0usize;
    for ((_, label), outcome) in test_samples.iter().zip(&outcomes) {
        failed += outcome.failed;
        non_converged += outcome.non_converged;
        if let Some(predicted) = outcome.predicted {
            confusion.record(*label, predicted);
            if predicted == *label {
                correct += 1;
            }
        }
        // samples with no successful relaxation stay out of the confusion
        // matrix but count as incorrect in the accuracy
    }
    EvalOutcome {
        accuracy: correct as f64 / test_samples.len() as f64,
        confusion,
        failed_relaxations: failed,
        non_converged,
    }
}

/// Learning speed extracted from a mean-distance trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningSpeed {
    /// Negative OLS slope of log10 mean distance per iteration (positive
    /// while the distance decays).
    pub slope: f64,
    /// Iterations used for the fit: `[start, end)`.
    pub window: (usize, usize),
    /// `slope / m_init`, the speed per physical equilibration run.
    pub normalized_slope: f64,
    /// Non-positive distances clamped before taking the log.
    pub clamped_points: usize,
}

/// Default regression window (iterations).
pub const SPEED_WINDOW: usize = 300;

/// Ordinary least-squares fit of `log10 D` against the iteration index over
/// the first `window` entries of `distances`.
pub fn learning_speed(
    distances: &[f64],
    window: usize,
    m_init: usize,
) -> Result<LearningSpeed, MetricsError> {
    if distances.len() < window || window < 2 {
        return Err(MetricsError::WindowTooShort {
            window,
            actual: distances.len(),
        });
    }
    let mut clamped = 0usize;
    let ys: Vec<f64> = distances[..window]
        .iter()
        .map(|&d| {
            if d <= 0.0 {
                clamped += 1;
            }
            d.max(LOG_CLAMP_EPS).log10()
        })
        .collect();
    let n = window as f64;
    let x_mean = (window - 1) as f64 / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        num += dx * (y - y_mean);
        den += dx * dx;
    }
    let slope = -(num / den);
    Ok(LearningSpeed {
        slope,
        window: (0, window),
        normalized_slope: slope / m_init as f64,
        clamped_points: clamped,
    })
}
