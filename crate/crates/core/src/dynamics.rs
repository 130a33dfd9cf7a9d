//! Gradient-flow relaxation to equilibrium.
//!
//! The phases follow `dφ/dt = -∂F/∂φ` with input units held fixed, integrated
//! with classical RK4 and step-doubling error control: each step is computed
//! once with step `h` and once as two steps of `h/2`; the step is accepted
//! when the per-unit difference stays within `abs_tol + rel_tol·|φ|`, and the
//! more accurate two-half-step state is kept. The step-size factor is
//! `0.9 · err^(-1/5)` clipped to `[0.2, 5.0]`.
//!
//! Integration stops at the time horizon, or earlier once the residual
//! gradient max-norm over the free units drops below `equilibrium_grad_tol`
//! (early exit can be disabled to mimic a fixed-horizon run).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

use crate::energy::phase_gradient_into;
use crate::model::{ModelParameters, PhaseConfiguration};
use crate::topology::NetworkTopology;

/// Step-size safety factor for the error controller.
const SAFETY: f64 = 0.9;
/// Step-size factor bounds.
const FACTOR_MIN: f64 = 0.2;
const FACTOR_MAX: f64 = 5.0;

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Model-time horizon T (inverse frequency units).
    pub horizon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Residual gradient max-norm below which the state counts as equilibrated.
    pub equilibrium_grad_tol: f64,
    /// Stop as soon as the residual tolerance is met instead of integrating to T.
    pub early_exit: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            initial_step: 0.01,
            max_step: 1.0,
            min_step: 1e-10,
            equilibrium_grad_tol: 1e-6,
            early_exit: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.equilibrium_grad_tol > 0.0
            && self.horizon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Relaxed state plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub phases: PhaseConfiguration,
    /// Max-norm of the phase gradient over free units at the final time.
    pub residual_norm: f64,
    /// Integrated model time.
    pub elapsed_time: f64,
    /// Accepted integration steps.
    pub step_count: usize,
    /// Whether `residual_norm < equilibrium_grad_tol`.
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("step size underflow at t={time:.6e} (h={step:.3e} below min_step)")]
    StepSizeUnderflow {
        time: f64,
        step: f64,
        partial: Box<EquilibriumResult>,
    },
    #[error("non-finite state at t={time:.6e}")]
    NonFiniteState { time: f64 },
}

/// Reusable integration buffers.
struct Workspace {
    stage: Vec<f64>,
    k: Vec<f64>,
    full: Vec<f64>,
    half: Vec<f64>,
    mid_slope: Vec<f64>,
    accum: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            stage: vec![0.0; n],
            k: vec![0.0; n],
            full: vec![0.0; n],
            half: vec![0.0; n],
            mid_slope: vec![0.0; n],
            accum: vec![0.0; n],
        }
    }
}

/// Relax from `initial` to equilibrium with inputs clamped to `sample_inputs`.
///
/// `targets` must be provided when `beta != 0`. Returns the final state with
/// diagnostics; non-convergence within the horizon is reported through the
/// `converged` flag, not as an error.
pub fn relax(
    initial: &PhaseConfiguration,
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    targets: Option<&[f64]>,
    config: &IntegratorConfig,
    sample_inputs: &[f64],
) -> Result<EquilibriumResult, DynamicsError> {
    relax_observed(
        initial,
        params,
        topology,
        beta,
        targets,
        config,
        sample_inputs,
        |_, _| {},
    )
}

/// [`relax`] with an observer invoked at `t = 0` and after every accepted
/// step with the current time and phases.
#[allow(clippy::too_many_arguments)]
pub fn relax_observed(
    initial: &PhaseConfiguration,
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    targets: Option<&[f64]>,
    config: &IntegratorConfig,
    sample_inputs: &[f64],
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<EquilibriumResult, DynamicsError> {
    config.validate()?;
    let n = topology.n_units();
    let n_in = topology.n_inputs();
    assert_eq!(initial.len(), n, "initial configuration length mismatch");
    assert_eq!(sample_inputs.len(), n_in, "input phase length mismatch");
    assert!(
        beta == 0.0 || targets.is_some(),
        "beta != 0 requires target phases"
    );

    let mut y = initial.phases.clone();
    y[..n_in].copy_from_slice(sample_inputs);

    let mut ws = Workspace::new(n);
    let mut slope = vec![0.0; n];
    // The flow field is the negative total-energy gradient with input
    // entries zeroed; `slope` always holds it at the current state.
    let mut eval = |state: &[f64], out: &mut [f64]| {
        phase_gradient_into(state, params, topology, beta, targets, out);
        for g in out.iter_mut() {
            *g = -*g;
        }
    };
    eval(&y, &mut slope);
    let mut residual = max_abs(&slope);
    if !residual.is_finite() {
        return Err(DynamicsError::NonFiniteState { time: 0.0 });
    }
    observer(0.0, &y);

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut h = config.initial_step.min(config.max_step);

    let finish = |y: Vec<f64>, residual: f64, t: f64, steps: usize| EquilibriumResult {
        phases: PhaseConfiguration::new(y),
        residual_norm: residual,
        elapsed_time: t,
        step_count: steps,
        converged: residual < config.equilibrium_grad_tol,
    };

    if config.early_exit && residual < config.equilibrium_grad_tol {
        return Ok(finish(y, residual, t, steps));
    }

    loop {
        let remaining = config.horizon - t;
        if remaining <= config.horizon * 1e-14 {
            break;
        }
        let h_try = h.min(remaining);

        // One full step; k1 = slope is shared with the first half step.
        rk4_step(
            &y,
            &slope,
            h_try,
            &mut ws.stage,
            &mut ws.k,
            &mut ws.full,
            &mut eval,
            n_in,
            sample_inputs,
        );
        // Two half steps.
        rk4_step(
            &y,
            &slope,
            0.5 * h_try,
            &mut ws.stage,
            &mut ws.k,
            &mut ws.half,
            &mut eval,
            n_in,
            sample_inputs,
        );
        eval(&ws.half, &mut ws.mid_slope);
        rk4_step(
            &ws.half,
            &ws.mid_slope,
            0.5 * h_try,
            &mut ws.stage,
            &mut ws.k,
            &mut ws.accum,
            &mut eval,
            n_in,
            sample_inputs,
        );

        // Per-unit error ratio of the step-doubling comparison.
        let mut err_ratio = 0.0f64;
        for i in 0..n {
            let scale = config.abs_tol + config.rel_tol * y[i].abs();
            let e = (ws.accum[i] - ws.full[i]).abs() / scale;
            if !e.is_finite() {
                return Err(DynamicsError::NonFiniteState { time: t });
            }
            err_ratio = err_ratio.max(e);
        }

        let accepted = err_ratio <= 1.0;
        if accepted {
            // Keep the two-half-step state.
            y.copy_from_slice(&ws.accum);
            y[..n_in].copy_from_slice(sample_inputs);
            t += h_try;
            steps += 1;
            eval(&y, &mut slope);
            residual = max_abs(&slope);
            if !residual.is_finite() {
                return Err(DynamicsError::NonFiniteState { time: t });
            }
            observer(t, &y);
            if config.early_exit && residual < config.equilibrium_grad_tol {
                break;
            }
        }

        let factor = (SAFETY * err_ratio.powf(-0.2)).clamp(FACTOR_MIN, FACTOR_MAX);
        h = (h_try * factor).min(config.max_step);
        if !accepted && h < config.min_step {
            let partial = finish(y, residual, t, steps);
            return Err(DynamicsError::StepSizeUnderflow {
                time: t,
                step: h,
                partial: Box::new(partial),
            });
        }
    }

    Ok(finish(y, residual, t, steps))
}

/// Classical RK4 step from `y` with precomputed `k1 = f(y)`, written into
/// `out`. Input-unit entries are re-clamped exactly.
#[allow(clippy::too_many_arguments)]
fn rk4_step(
    y: &[f64],
    k1: &[f64],
    h: f64,
    stage: &mut [f64],
    k: &mut [f64],
    out: &mut [f64],
    eval: &mut impl FnMut(&[f64], &mut [f64]),
    n_inputs: usize,
    inputs: &[f64],
) {
    let n = y.len();
    // k2 = f(y + h/2 k1)
    for i in 0..n {
        stage[i] = y[i] + 0.5 * h * k1[i];
    }
    eval(stage, k);
    for i in 0..n {
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k[i]);
    }
    // k3 = f(y + h/2 k2)
    for i in 0..n {
        stage[i] = y[i] + 0.5 * h * k[i];
    }
    eval(stage, k);
    for i in 0..n {
        out[i] += (h / 6.0) * 2.0 * k[i];
    }
    // k4 = f(y + h k3)
    for i in 0..n {
        stage[i] = y[i] + h * k[i];
    }
    eval(stage, k);
    for i in 0..n {
        out[i] += (h / 6.0) * k[i];
    }
    out[..n_inputs].copy_from_slice(inputs);
}

/// Max-norm; returns NaN if any entry is non-finite (f64::max would hide it).
fn max_abs(v: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for &x in v {
        if !x.is_finite() {
            return f64::NAN;
        }
        m = m.max(x.abs());
    }
    m
}

/// One distinct equilibrium with its basin occupation count.
#[derive(Debug, Clone)]
pub struct EquilibriumCluster {
    pub representative: PhaseConfiguration,
    pub count: usize,
}

/// Outcome of [`enumerate_equilibria`].
#[derive(Debug, Clone)]
pub struct EquilibriumCensus {
    /// Distinct equilibria, most occupied first; counts sum to the number of
    /// converged trials.
    pub clusters: Vec<EquilibriumCluster>,
    pub non_converged: usize,
    pub failed_trials: usize,
}

/// Search for stable fixed points by relaxing from `n_trials` uniform-random
/// initializations of the hidden and output phases (inputs clamped).
/// Converged results are clustered by per-unit circular distance below
/// `cluster_tol`; integration failures are skipped and counted.
pub fn enumerate_equilibria(
    params: &ModelParameters,
    topology: &NetworkTopology,
    sample_inputs: &[f64],
    n_trials: usize,
    cluster_tol: f64,
    rng_seed: u64,
    config: &IntegratorConfig,
) -> Result<EquilibriumCensus, DynamicsError> {
    assert!(n_trials >= 1, "n_trials must be at least 1");
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = topology.n_units();
    let n_in = topology.n_inputs();

    let mut clusters: Vec<EquilibriumCluster> = Vec::new();
    let mut non_converged = 0usize;
    let mut failed = 0usize;

    for _ in 0..n_trials {
        let mut init = PhaseConfiguration::zeros(n);
        init.phases[..n_in].copy_from_slice(sample_inputs);
        for p in init.phases[n_in..].iter_mut() {
            *p = rng.random_range(-PI..PI);
        }
        let result = match relax(&init, params, topology, 0.0, None, config, sample_inputs) {
            Ok(r) => r,
            Err(DynamicsError::InvalidConfig(msg)) => {
                return Err(DynamicsError::InvalidConfig(msg))
            }
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        if !result.converged {
            non_converged += 1;
            continue;
        }
        let state = result.phases;
        match clusters
            .iter_mut()
            .find(|c| c.representative.max_circular_distance(&state) < cluster_tol)
        {
            Some(cluster) => cluster.count += 1,
            None => clusters.push(EquilibriumCluster {
                representative: state,
                count: 1,
            }),
        }
    }

    clusters.sort_by(|a, b| b.count.cmp(&a.count));
    Ok(EquilibriumCensus {
        clusters,
        non_converged,
        failed_trials: failed,
    })
}

/// Write a recorded trajectory as columnar text: one row per snapshot with
/// the time followed by every phase.
pub fn write_trajectory(
    mut sink: impl Write,
    snapshots: &[(f64, Vec<f64>)],
) -> std::io::Result<()> {
    writeln!(sink, "# time phi_0 .. phi_{{N-1}}")?;
    for (t, phases) in snapshots {
        write!(sink, "{t:.9e}")?;
        for p in phases {
            write!(sink, " {p:.17e}")?;
        }
        writeln!(sink)?;
    }
    Ok(())
}
