//! Equilibrium-propagation training loop.
//!
//! One update step runs, for every sample in the batch and for each of
//! `m_init` random initializations of the hidden and output phases:
//!
//! 1. clamp the inputs and relax to the free equilibrium (β = 0),
//! 2. switch on the nudge (β > 0, outputs pulled toward the target) and relax
//!    again starting from the free equilibrium,
//! 3. form the per-parameter contribution
//!    `(∂E/∂θ|nudge - ∂E/∂θ|free) / β`,
//!
//! then averages the contributions and applies plain gradient descent
//! `θ ← θ - η · avg`. Averaging over random initializations trains all the
//! stable fixed points of a multistable energy landscape simultaneously.
//!
//! Within an iteration the (sample × initialization) grid is embarrassingly
//! parallel; contributions are reduced in canonical (sample, init) order so
//! results are bit-identical whether or not the grid runs in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

use crate::dynamics::{relax, DynamicsError, EquilibriumResult, IntegratorConfig};
use crate::energy::distance;
use crate::model::{ModelParameters, ParameterGradients, PhaseConfiguration, TrainingSample};
use crate::seeds;
use crate::topology::NetworkTopology;

/// Hyperparameters of the training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Nudge strength β > 0.
    pub beta: f64,
    /// Learning rate η.
    pub eta: f64,
    /// Random phase initializations per sample.
    pub m_init: usize,
    /// Batch size.
    pub m_data: usize,
    pub n_iterations: usize,
    pub rng_seed: u64,
    /// Evaluate (and checkpoint) every this many iterations; 0 disables
    /// periodic evaluation. Iterations 0 and `n_iterations` always evaluate.
    pub eval_every: usize,
    /// Additional iterations at which to evaluate regardless of `eval_every`.
    pub extra_eval_iterations: Vec<usize>,
    pub integrator: IntegratorConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            eta: 0.1,
            m_init: 1,
            m_data: 4,
            n_iterations: 1000,
            rng_seed: 0,
            eval_every: 50,
            extra_eval_iterations: Vec::new(),
            integrator: IntegratorConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.beta > 0.0) {
            return Err(TrainError::InvalidConfig(
                "beta must be positive (negative nudging is unsupported)".into(),
            ));
        }
        if self.m_init == 0 || self.m_data == 0 {
            return Err(TrainError::InvalidConfig(
                "m_init and m_data must be at least 1".into(),
            ));
        }
        self.integrator
            .validate()
            .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    fn evaluates_at(&self, iteration: usize) -> bool {
        iteration == 0
            || iteration == self.n_iterations
            || (self.eval_every > 0 && iteration % self.eval_every == 0)
            || self.extra_eval_iterations.contains(&iteration)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("{phase} relaxation failed: {source}")]
    Relaxation {
        phase: &'static str,
        #[source]
        source: DynamicsError,
    },
    #[error("batch size {actual} does not match m_data = {expected}")]
    BatchSize { expected: usize, actual: usize },
    #[error("all relaxations failed in iteration {iteration}")]
    AllRelaxationsFailed { iteration: usize },
    #[error("training halted after {count} consecutive failed iterations (at iteration {iteration})")]
    RepeatedFailure { iteration: usize, count: usize },
}

/// Free and nudge equilibria of one (sample, initialization) pair together
/// with the EP gradient contribution.
#[derive(Debug, Clone)]
pub struct EpStepOutcome {
    pub free: EquilibriumResult,
    pub nudge: EquilibriumResult,
    pub contribution: ParameterGradients,
}

/// Run one free/nudge pair from the given initialization and form the EP
/// contribution `(∂E/∂θ|nudge - ∂E/∂θ|free) / β`.
///
/// The nudge relaxation starts from the free equilibrium. Input phases of
/// `init` are overridden by the sample's input phases.
pub fn ep_step_single(
    sample: &TrainingSample,
    init: &PhaseConfiguration,
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    integrator: &IntegratorConfig,
) -> Result<EpStepOutcome, TrainError> {
    assert!(beta > 0.0, "ep step requires beta > 0");
    assert!(sample.matches(topology), "sample does not fit topology");
    let free = relax(
        init,
        params,
        topology,
        0.0,
        None,
        integrator,
        &sample.input_phases,
    )
    .map_err(|source| TrainError::Relaxation {
        phase: "free",
        source,
    })?;
    let nudge = relax(
        &free.phases,
        params,
        topology,
        beta,
        Some(&sample.target_phases),
        integrator,
        &sample.input_phases,
    )
    .map_err(|source| TrainError::Relaxation {
        phase: "nudge",
        source,
    })?;
    let mut contribution = ParameterGradients::zeros(topology);
    ep_contribution_into(
        free.phases.as_slice(),
        nudge.phases.as_slice(),
        params,
        topology,
        beta,
        &mut contribution,
    );
    Ok(EpStepOutcome {
        free,
        nudge,
        contribution,
    })
}

/// Fused evaluation of `(∂E/∂θ|nudge - ∂E/∂θ|free) / β` from the two
/// equilibria, one entry per trainable parameter.
fn ep_contribution_into(
    free: &[f64],
    nudge: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    out: &mut ParameterGradients,
) {
    let inv_beta = 1.0 / beta;
    for (k, &(i, j)) in topology.pairs_raw().iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        // ∂E/∂W_ij = -cos(φ_i - φ_j)
        out.weights[k] = ((free[i] - free[j]).cos() - (nudge[i] - nudge[j]).cos()) * inv_beta;
    }
    let n_in = topology.n_inputs();
    for k in 0..topology.n_free() {
        let psi = params.bias_angles[k];
        let d_free = free[n_in + k] - psi;
        let d_nudge = nudge[n_in + k] - psi;
        // ∂E/∂h_i = -cos(φ_i - ψ_i), ∂E/∂ψ_i = -h_i sin(φ_i - ψ_i)
        out.bias_strengths[k] = (d_free.cos() - d_nudge.cos()) * inv_beta;
        out.bias_angles[k] = params.bias_strengths[k] * (d_free.sin() - d_nudge.sin()) * inv_beta;
    }
}

/// Averaged EP gradient estimate with relaxation diagnostics.
#[derive(Debug, Clone)]
pub struct EpGradientEstimate {
    /// Estimate of ∂C/∂θ, averaged over all successful (sample, init) pairs.
    pub gradients: ParameterGradients,
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub free_non_converged: usize,
    pub nudge_non_converged: usize,
}

/// Per-iteration batch diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchDiagnostics {
    /// Mean distance D between free-equilibrium outputs and targets over the
    /// successful (sample, init) pairs.
    pub mean_distance: f64,
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub free_non_converged: usize,
    pub nudge_non_converged: usize,
}

struct SampleOutcome {
    grad_sum: ParameterGradients,
    successes: usize,
    failed: usize,
    distance_sum: f64,
    free_non_converged: usize,
    nudge_non_converged: usize,
}

/// Compute the averaged EP gradient for a batch with explicit per-(sample,
/// init) initial configurations. `inits[i]` holds the initializations for
/// `batch[i]`.
///
/// Relaxation failures are dropped from the average and counted; an error is
/// returned only if every pair fails.
pub fn ep_gradient_with_inits(
    batch: &[TrainingSample],
    inits: &[Vec<PhaseConfiguration>],
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    integrator: &IntegratorConfig,
) -> Result<(EpGradientEstimate, f64), TrainError> {
    assert_eq!(batch.len(), inits.len(), "one init set per sample required");
    let outcomes: Vec<SampleOutcome> = batch
        .par_iter()
        .zip(inits.par_iter())
        .map(|(sample, sample_inits)| {
            let mut out = SampleOutcome {
                grad_sum: ParameterGradients::zeros(topology),
                successes: 0,
                failed: 0,
                distance_sum: 0.0,
                free_non_converged: 0,
                nudge_non_converged: 0,
            };
            for init in sample_inits {
                match ep_step_single(sample, init, params, topology, beta, integrator) {
                    Ok(step) => {
                        out.grad_sum.add_scaled(&step.contribution, 1.0);
                        out.successes += 1;
                        out.distance_sum += distance(
                            step.free.phases.output_phases(topology),
                            &sample.target_phases,
                        );
                        if !step.free.converged {
                            out.free_non_converged += 1;
                        }
                        if !step.nudge.converged {
                            out.nudge_non_converged += 1;
                        }
                    }
                    Err(_) => out.failed += 1,
                }
            }
            out
        })
        .collect();

    // Canonical-order reduction keeps the result independent of scheduling.
    let mut grad = ParameterGradients::zeros(topology);
    let mut succeeded = 0usize;
    let mut failed = 0usize;
    let mut distance_sum = 0.0;
    let mut free_nc = 0usize;
    let mut nudge_nc = 0usize;
    for out in &outcomes {
        grad.add_scaled(&out.grad_sum, 1.0);
        succeeded += out.successes;
        failed += out.failed;
        distance_sum += out.distance_sum;
        free_nc += out.free_non_converged;
        nudge_nc += out.nudge_non_converged;
    }
    let attempted = succeeded + failed;
    if succeeded == 0 {
        return Err(TrainError::AllRelaxationsFailed { iteration: 0 });
    }
    grad.scale(1.0 / succeeded as f64);
    Ok((
        EpGradientEstimate {
            gradients: grad,
            attempted,
            succeeded,
            failed,
            free_non_converged: free_nc,
            nudge_non_converged: nudge_nc,
        },
        distance_sum / succeeded as f64,
    ))
}

/// One full parameter update with explicit initial configurations; see
/// [`ep_gradient_with_inits`].
pub fn ep_update_with_inits(
    batch: &[TrainingSample],
    inits: &[Vec<PhaseConfiguration>],
    params: &ModelParameters,
    topology: &NetworkTopology,
    config: &TrainConfig,
) -> Result<(ModelParameters, BatchDiagnostics), TrainError> {
    let (estimate, mean_distance) = ep_gradient_with_inits(
        batch,
        inits,
        params,
        topology,
        config.beta,
        &config.integrator,
    )?;
    let mut updated = params.clone();
    updated.add_scaled(&estimate.gradients, -config.eta);
    Ok((
        updated,
        BatchDiagnostics {
            mean_distance,
            attempted: estimate.attempted,
            succeeded: estimate.succeeded,
            failed: estimate.failed,
            free_non_converged: estimate.free_non_converged,
            nudge_non_converged: estimate.nudge_non_converged,
        },
    ))
}

/// Draw one random initialization per (sample, init) pair: hidden and output
/// phases uniform on `[-π, π)`, inputs clamped to the sample inputs.
pub fn draw_initializations(
    batch: &[TrainingSample],
    m_init: usize,
    topology: &NetworkTopology,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<PhaseConfiguration>> {
    let n = topology.n_units();
    let n_in = topology.n_inputs();
    batch
        .iter()
        .map(|sample| {
            (0..m_init)
                .map(|_| {
                    let mut phases = vec![0.0; n];
                    phases[..n_in].copy_from_slice(&sample.input_phases);
                    for p in phases[n_in..].iter_mut() {
                        *p = rng.random_range(-PI..PI);
                    }
                    PhaseConfiguration::new(phases)
                })
                .collect()
        })
        .collect()
}

/// One EP update over a batch, drawing `m_init` random initializations per
/// sample from `rng`. Returns the updated parameters.
pub fn ep_update(
    batch: &[TrainingSample],
    params: &ModelParameters,
    topology: &NetworkTopology,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(ModelParameters, BatchDiagnostics), TrainError> {
    config.validate()?;
    if batch.len() != config.m_data {
        return Err(TrainError::BatchSize {
            expected: config.m_data,
            actual: batch.len(),
        });
    }
    let inits = draw_initializations(batch, config.m_init, topology, rng);
    ep_update_with_inits(batch, &inits, params, topology, config)
}

/// Parameter initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// Weights standard normal, bias strengths uniform on `[-0.5, 0.5)`,
    /// bias angles uniform on `[-π, π)`.
    Xor,
    /// Weights normal with std `1/√N` (all-to-all) or `1/√(N_l + N_{l+1})`
    /// (between consecutive layers), bias strengths zero, bias angles uniform
    /// on `[-π, π)`.
    Digits,
}

/// Draw initial parameters for a topology.
///
/// Draw order is canonical (weights in pair order, then bias strengths, then
/// bias angles), so results are reproducible from the seed alone.
pub fn init_parameters(
    topology: &NetworkTopology,
    scheme: InitScheme,
    rng: &mut ChaCha8Rng,
) -> ModelParameters {
    let mut params = ModelParameters::zeros(topology);
    match scheme {
        InitScheme::Xor => {
            for w in params.weights.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *w = z;
            }
            for h in params.bias_strengths.iter_mut() {
                *h = rng.random_range(-0.5..0.5);
            }
            for psi in params.bias_angles.iter_mut() {
                *psi = rng.random_range(-PI..PI);
            }
        }
        InitScheme::Digits => {
            let n = topology.n_units() as f64;
            let sizes = topology.layer_sizes();
            for (k, (i, _j)) in topology.pairs().enumerate() {
                let sigma = match sizes {
                    None => 1.0 / n.sqrt(),
                    Some(sizes) => {
                        // pairs connect consecutive layers; i sits in the lower one
                        let l = topology.layer_of(i).expect("unit outside layers");
                        1.0 / ((sizes[l] + sizes[l + 1]) as f64).sqrt()
                    }
                };
                let z: f64 = StandardNormal.sample(rng);
                params.weights[k] = sigma * z;
            }
            // bias strengths stay zero
            for psi in params.bias_angles.iter_mut() {
                *psi = rng.random_range(-PI..PI);
            }
        }
    }
    params
}

/// Per-iteration batch source. Implementations define how a batch is drawn
/// (the XOR task always returns its four canonical samples; the digits task
/// samples class-balanced batches from the training split).
pub trait BatchSource: Sync {
    fn next_batch(
        &self,
        iteration: usize,
        m_data: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<TrainingSample>;
}

/// Task metrics attached to a training record by the evaluation hook.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalMetrics {
    pub test_accuracy: Option<f64>,
    pub test_error: Option<f64>,
}

/// One structured training-log record.
///
/// Serialized records are fully determined by the seed and config; wall-clock
/// timing is deliberately left out so logs compare byte-for-byte across runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainRecord {
    pub iteration: usize,
    /// Mean free-equilibrium distance over the iteration's batch; absent for
    /// the initial record.
    pub mean_distance: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_error: Option<f64>,
    pub non_converged: usize,
    pub failed: usize,
}

/// Append one record as a JSON line.
pub fn append_record(mut sink: impl Write, record: &TrainRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut sink, record)?;
    writeln!(sink)
}

/// Callbacks invoked by [`train`].
#[derive(Default)]
pub struct TrainHooks<'a> {
    /// Called at evaluation iterations (0, multiples of `eval_every`, extras,
    /// and the final iteration) with the current parameters.
    pub evaluate: Option<Box<dyn FnMut(usize, &ModelParameters) -> EvalMetrics + 'a>>,
    /// Called after every record is produced (streaming log writer).
    pub on_record: Option<Box<dyn FnMut(&TrainRecord) + 'a>>,
    /// Called at evaluation iterations for checkpointing.
    pub on_checkpoint: Option<Box<dyn FnMut(usize, &ModelParameters) + 'a>>,
}

/// Completed training run: all records plus the final parameters.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub records: Vec<TrainRecord>,
    pub params: ModelParameters,
}

/// Run the full training loop.
///
/// Emits one record per iteration (plus the initial record at iteration 0)
/// and halts with an error after more than three consecutive iterations in
/// which every relaxation failed.
pub fn train(
    source: &dyn BatchSource,
    topology: &NetworkTopology,
    initial: ModelParameters,
    config: &TrainConfig,
    hooks: &mut TrainHooks,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    assert!(initial.matches(topology), "parameters do not fit topology");
    let mut params = initial;
    let mut batch_rng =
        ChaCha8Rng::seed_from_u64(seeds::derive(config.rng_seed, seeds::stream::BATCH));
    let mut init_rng =
        ChaCha8Rng::seed_from_u64(seeds::derive(config.rng_seed, seeds::stream::INIT));

    let mut records = Vec::with_capacity(config.n_iterations + 1);
    let emit = |record: TrainRecord,
                    hooks: &mut TrainHooks,
                    records: &mut Vec<TrainRecord>| {
        if let Some(on_record) = hooks.on_record.as_mut() {
            on_record(&record);
        }
        records.push(record);
    };

    let initial_eval = hooks
        .evaluate
        .as_mut()
        .map(|eval| eval(0, &params))
        .unwrap_or_default();
    if let Some(ckpt) = hooks.on_checkpoint.as_mut() {
        ckpt(0, &params);
    }
    emit(
        TrainRecord {
            iteration: 0,
            mean_distance: None,
            test_accuracy: initial_eval.test_accuracy,
            test_error: initial_eval.test_error,
            non_converged: 0,
            failed: 0,
        },
        hooks,
        &mut records,
    );

    let mut consecutive_failures = 0usize;
    for iteration in 1..=config.n_iterations {
        let batch = source.next_batch(iteration, config.m_data, &mut batch_rng);
        if batch.len() != config.m_data {
            return Err(TrainError::BatchSize {
                expected: config.m_data,
                actual: batch.len(),
            });
        }
        let inits = draw_initializations(&batch, config.m_init, topology, &mut init_rng);
        match ep_update_with_inits(&batch, &inits, &params, topology, config) {
            Ok((updated, diag)) => {
                consecutive_failures = 0;
                params = updated;
                let metrics = if config.evaluates_at(iteration) {
                    let m = hooks
                        .evaluate
                        .as_mut()
                        .map(|eval| eval(iteration, &params))
                        .unwrap_or_default();
                    if let Some(ckpt) = hooks.on_checkpoint.as_mut() {
                        ckpt(iteration, &params);
                    }
                    m
                } else {
                    EvalMetrics::default()
                };
                emit(
                    TrainRecord {
                        iteration,
                        mean_distance: Some(diag.mean_distance),
                        test_accuracy: metrics.test_accuracy,
                        test_error: metrics.test_error,
                        non_converged: diag.free_non_converged + diag.nudge_non_converged,
                        failed: diag.failed,
                    },
                    hooks,
                    &mut records,
                );
            }
            Err(TrainError::AllRelaxationsFailed { .. }) => {
                consecutive_failures += 1;
                if consecutive_failures > 3 {
                    return Err(TrainError::RepeatedFailure {
                        iteration,
                        count: consecutive_failures,
                    });
                }
                emit(
                    TrainRecord {
                        iteration,
                        mean_distance: None,
                        test_accuracy: None,
                        test_error: None,
                        non_converged: 0,
                        failed: config.m_data * config.m_init,
                    },
                    hooks,
                    &mut records,
                );
            }
            Err(other) => return Err(other),
        }
    }

    Ok(TrainOutcome { records, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{cost, parameter_gradients};

    fn relay_network() -> (NetworkTopology, ModelParameters) {
        // input -> output, single ferromagnetic coupling
        let topo = NetworkTopology::all_to_all(1, 0, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        params.weights[0] = 1.0;
        (topo, params)
    }

    #[test]
    fn zero_cost_gradient_gives_zero_contribution() {
        let (topo, params) = relay_network();
        let integ = IntegratorConfig::default();
        let init = PhaseConfiguration::new(vec![0.5, -1.0]);
        let free = relax(&init, &params, &topo, 0.0, None, &integ, &[0.5]).unwrap();
        // target the free equilibrium exactly: the nudge force vanishes
        let sample = TrainingSample::new(vec![0.5], free.phases.output_phases(&topo).to_vec());
        let step = ep_step_single(&sample, &init, &params, &topo, 0.1, &integ).unwrap();
        assert_eq!(step.nudge.phases.phases, step.free.phases.phases);
        assert!(step.contribution.max_abs() == 0.0);
    }

    #[test]
    fn fused_contribution_matches_two_pass_route() {
        let topo = NetworkTopology::all_to_all(1, 2, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        for (k, w) in params.weights.iter_mut().enumerate() {
            *w = ((k + 1) as f64 * 0.77).sin();
        }
        params.bias_strengths.copy_from_slice(&[0.3, -0.2, 0.5]);
        params.bias_angles.copy_from_slice(&[1.0, -2.0, 0.1]);
        let free = vec![0.5, 0.2, -1.3, 2.0];
        let nudge = vec![0.5, 0.25, -1.2, 1.9];
        let beta = 0.05;

        let mut fused = ParameterGradients::zeros(&topo);
        ep_contribution_into(&free, &nudge, &params, &topo, beta, &mut fused);

        let mut reference = ParameterGradients::zeros(&topo);
        reference.add_scaled(&parameter_gradients(&nudge, &params, &topo), 1.0 / beta);
        reference.add_scaled(&parameter_gradients(&free, &params, &topo), -1.0 / beta);

        for (a, b) in fused.weights.iter().zip(&reference.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in fused.bias_strengths.iter().zip(&reference.bias_strengths) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in fused.bias_angles.iter().zip(&reference.bias_angles) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (topo, params) = relay_network();
        let config = TrainConfig {
            eta: 0.0,
            m_data: 1,
            ..TrainConfig::default()
        };
        let sample = TrainingSample::new(vec![0.5], vec![1.2]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (updated, _) = ep_update(&[sample], &params, &topo, &config, &mut rng).unwrap();
        assert_eq!(updated, params);
    }

    #[test]
    fn duplicated_initializations_average_to_single_result() {
        let (topo, params) = relay_network();
        let config = TrainConfig {
            m_data: 1,
            ..TrainConfig::default()
        };
        let sample = TrainingSample::new(vec![0.5], vec![1.2]);
        let init = PhaseConfiguration::new(vec![0.5, 2.2]);
        let batch = vec![sample];
        let single = ep_update_with_inits(&batch, &[vec![init.clone()]], &params, &topo, &config)
            .unwrap()
            .0;
        let doubled =
            ep_update_with_inits(&batch, &[vec![init.clone(), init]], &params, &topo, &config)
                .unwrap()
                .0;
        assert_eq!(single, doubled);
    }

    #[test]
    fn update_direction_decreases_free_cost() {
        // monostable: strong ferromagnetic chain with biases
        let topo = NetworkTopology::all_to_all(1, 1, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        params.weights.fill(1.5);
        params.bias_strengths.fill(0.3);
        params.bias_angles.copy_from_slice(&[0.2, -0.4]);
        let sample = TrainingSample::new(vec![0.4], vec![1.0]);
        let init = PhaseConfiguration::new(vec![0.4, 0.1, 0.1]);
        let integ = IntegratorConfig::default();

        let free_cost = |p: &ModelParameters| {
            let eq = relax(&init, p, &topo, 0.0, None, &integ, &[0.4]).unwrap();
            cost(eq.phases.output_phases(&topo), &sample.target_phases)
        };
        let config = TrainConfig {
            beta: 1e-3,
            eta: 1e-3,
            m_data: 1,
            ..TrainConfig::default()
        };
        let before = free_cost(&params);
        let (updated, _) = ep_update_with_inits(
            &[sample.clone()],
            &[vec![init.clone()]],
            &params,
            &topo,
            &config,
        )
        .unwrap();
        let after = free_cost(&updated);
        assert!(
            after < before,
            "cost did not decrease: {before:.6} -> {after:.6}"
        );
    }

    #[test]
    fn xor_scheme_statistics() {
        let topo = NetworkTopology::all_to_all(1, 140, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = init_parameters(&topo, InitScheme::Xor, &mut rng);
        let n = params.weights.len() as f64;
        assert!(n >= 10_000.0);
        let mean = params.weights.iter().sum::<f64>() / n;
        let var = params.weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 / n.sqrt(), "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.05, "std {}", var.sqrt());
        for &h in &params.bias_strengths {
            assert!((-0.5..0.5).contains(&h));
        }
        for &psi in &params.bias_angles {
            assert!((-PI..PI).contains(&psi));
        }
    }

    #[test]
    fn digits_scheme_statistics() {
        let topo = NetworkTopology::layered(&[64, 20, 10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = init_parameters(&topo, InitScheme::Digits, &mut rng);
        assert!(params.bias_strengths.iter().all(|&h| h == 0.0));
        // first 64*20 weights connect layers 0 and 1
        let first_block: Vec<f64> = params.weights[..64 * 20].to_vec();
        let n = first_block.len() as f64;
        let mean = first_block.iter().sum::<f64>() / n;
        let std =
            (first_block.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n).sqrt();
        let target = 1.0 / (84.0f64).sqrt();
        assert!((std - target).abs() / target < 0.05, "std {std} vs {target}");
    }

    #[test]
    fn digits_scheme_all_to_all_scale() {
        let topo = NetworkTopology::all_to_all(64, 11, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = init_parameters(&topo, InitScheme::Digits, &mut rng);
        let n = params.weights.len() as f64;
        let mean = params.weights.iter().sum::<f64>() / n;
        let std = (params.weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n).sqrt();
        let target = 1.0 / (85.0f64).sqrt();
        assert!((std - target).abs() / target < 0.05, "std {std} vs {target}");
    }

    struct FixedBatch(Vec<TrainingSample>);
    impl BatchSource for FixedBatch {
        fn next_batch(&self, _: usize, m_data: usize, _: &mut ChaCha8Rng) -> Vec<TrainingSample> {
            assert_eq!(m_data, self.0.len());
            self.0.clone()
        }
    }

    #[test]
    fn zero_iteration_training_only_evaluates() {
        let (topo, params) = relay_network();
        let source = FixedBatch(vec![TrainingSample::new(vec![0.5], vec![1.0])]);
        let config = TrainConfig {
            n_iterations: 0,
            m_data: 1,
            ..TrainConfig::default()
        };
        let mut hooks = TrainHooks {
            evaluate: Some(Box::new(|_, _| EvalMetrics {
                test_accuracy: Some(0.5),
                test_error: Some(0.5),
            })),
            ..TrainHooks::default()
        };
        let outcome = train(&source, &topo, params.clone(), &config, &mut hooks).unwrap();
        assert_eq!(outcome.records.len(), 1);
        assert_eq!(outcome.records[0].iteration, 0);
        assert_eq!(outcome.records[0].mean_distance, None);
        assert_eq!(outcome.records[0].test_accuracy, Some(0.5));
        assert_eq!(outcome.params, params);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (topo, params) = relay_network();
        let source = FixedBatch(vec![TrainingSample::new(vec![0.5], vec![1.0])]);
        let config = TrainConfig {
            n_iterations: 5,
            m_data: 1,
            rng_seed: 99,
            eval_every: 2,
            ..TrainConfig::default()
        };
        let run = |p: ModelParameters| {
            train(&source, &topo, p, &config, &mut TrainHooks::default()).unwrap()
        };
        let a = run(params.clone());
        let b = run(params);
        assert_eq!(a.records, b.records);
        assert_eq!(a.params, b.params);
        // serialized form identical too
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        for r in &a.records {
            append_record(&mut buf_a, r).unwrap();
        }
        for r in &b.records {
            append_record(&mut buf_b, r).unwrap();
        }
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn training_halts_after_repeated_total_failure() {
        let (topo, mut params) = relay_network();
        params.weights[0] = f64::NAN; // every relaxation fails immediately
        let source = FixedBatch(vec![TrainingSample::new(vec![0.5], vec![1.0])]);
        let config = TrainConfig {
            n_iterations: 10,
            m_data: 1,
            ..TrainConfig::default()
        };
        match train(&source, &topo, params, &config, &mut TrainHooks::default()) {
            Err(TrainError::RepeatedFailure { iteration, count }) => {
                assert_eq!(iteration, 4);
                assert_eq!(count, 4);
            }
            other => panic!("expected repeated-failure halt, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad_beta = TrainConfig {
            beta: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad_beta.validate().is_err());
        let bad_batch = TrainConfig {
            m_data: 0,
            ..TrainConfig::default()
        };
        assert!(bad_batch.validate().is_err());
    }
}
