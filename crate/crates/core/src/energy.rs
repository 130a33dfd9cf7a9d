//! Energy, cost and analytical gradients of the oscillator network.
//!
//! The internal energy is
//!
//! ```text
//! E = -Σ_{pairs {i,j}} W_ij cos(φ_i - φ_j) - Σ_{i ∉ inputs} h_i cos(φ_i - ψ_i)
//! ```
//!
//! where the single sum over unordered pairs absorbs the 1/2 double-count of
//! the symmetric-matrix form. The training cost compares output phases with a
//! target configuration,
//!
//! ```text
//! C = Σ_{i ∈ outputs} -ln(1 + cos(φ_i - φ_i^τ))
//! ```
//!
//! and the total energy is `F = E + β C`. The logarithm diverges at phase
//! difference π; its argument is clamped below at [`LOG_CLAMP_EPS`] so the
//! strong repulsion from incorrect solutions survives while step sizes stay
//! bounded.

use crate::model::{ModelParameters, ParameterGradients};
use crate::topology::NetworkTopology;

/// Lower clamp for the argument of the cost logarithm.
pub const LOG_CLAMP_EPS: f64 = 1e-12;

/// Internal energy E of a phase configuration.
pub fn internal_energy(
    phases: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
) -> f64 {
    debug_assert_eq!(phases.len(), topology.n_units());
    debug_assert!(params.matches(topology));
    let mut e = 0.0;
    for (k, &(i, j)) in topology.pairs_raw().iter().enumerate() {
        e -= params.weights[k] * (phases[i as usize] - phases[j as usize]).cos();
    }
    let n_in = topology.n_inputs();
    for k in 0..topology.n_free() {
        e -= params.bias_strengths[k] * (phases[n_in + k] - params.bias_angles[k]).cos();
    }
    e
}

/// Cosine-similarity distance D between output and target phases.
///
/// Ranges over `[0, 2 n_outputs]`; zero exactly at phase agreement.
pub fn distance(output_phases: &[f64], target_phases: &[f64]) -> f64 {
    assert_eq!(
        output_phases.len(),
        target_phases.len(),
        "output/target length mismatch"
    );
    output_phases
        .iter()
        .zip(target_phases)
        .map(|(&p, &t)| 1.0 - (p - t).cos())
        .sum()
}

/// Training cost C with the log argument clamped at `eps`.
pub fn cost_clamped(output_phases: &[f64], target_phases: &[f64], eps: f64) -> f64 {
    assert_eq!(
        output_phases.len(),
        target_phases.len(),
        "output/target length mismatch"
    );
    output_phases
        .iter()
        .zip(target_phases)
        .map(|(&p, &t)| -(1.0 + (p - t).cos()).max(eps).ln())
        .sum()
}

/// Training cost C; minimum `-n_outputs ln 2` at exact phase agreement.
pub fn cost(output_phases: &[f64], target_phases: &[f64]) -> f64 {
    cost_clamped(output_phases, target_phases, LOG_CLAMP_EPS)
}

/// dC/dφ for a single output unit with phase difference `delta`.
#[inline]
pub fn cost_phase_derivative(delta: f64) -> f64 {
    delta.sin() / (1.0 + delta.cos()).max(LOG_CLAMP_EPS)
}

/// Energy breakdown F = E + β C at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub internal: f64,
    pub cost: f64,
    pub beta: f64,
    pub total: f64,
}

/// Evaluate E, C and F = E + β C. `targets` is required when β ≠ 0.
pub fn total_energy(
    phases: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    targets: Option<&[f64]>,
) -> EnergyBreakdown {
    let internal = internal_energy(phases, params, topology);
    let cost_value = match targets {
        Some(t) => cost(&phases[topology.output_start()..], t),
        None => {
            assert!(beta == 0.0, "beta != 0 requires target phases");
            0.0
        }
    };
    EnergyBreakdown {
        internal,
        cost: cost_value,
        beta,
        total: internal + beta * cost_value,
    }
}

/// ∂F/∂φ_i for every unit, written into `out`.
///
/// Entries for input units are zero (inputs are clamped). `targets` is
/// required when β ≠ 0.
pub fn phase_gradient_into(
    phases: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    targets: Option<&[f64]>,
    out: &mut [f64],
) {
    debug_assert_eq!(phases.len(), topology.n_units());
    debug_assert_eq!(out.len(), topology.n_units());
    assert!(
        beta == 0.0 || targets.is_some(),
        "beta != 0 requires target phases"
    );
    out.fill(0.0);
    for (k, &(i, j)) in topology.pairs_raw().iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        let s = params.weights[k] * (phases[i] - phases[j]).sin();
        out[i] += s;
        out[j] -= s;
    }
    let n_in = topology.n_inputs();
    for k in 0..topology.n_free() {
        out[n_in + k] +=
            params.bias_strengths[k] * (phases[n_in + k] - params.bias_angles[k]).sin();
    }
    if beta != 0.0 {
        let targets = targets.unwrap();
        debug_assert_eq!(targets.len(), topology.n_outputs());
        let out_start = topology.output_start();
        for (o, &t) in targets.iter().enumerate() {
            out[out_start + o] += beta * cost_phase_derivative(phases[out_start + o] - t);
        }
    }
    out[..n_in].fill(0.0);
}

/// ∂F/∂φ_i for every unit; see [`phase_gradient_into`].
pub fn phase_gradient(
    phases: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
    beta: f64,
    targets: Option<&[f64]>,
) -> Vec<f64> {
    let mut out = vec![0.0; topology.n_units()];
    phase_gradient_into(phases, params, topology, beta, targets, &mut out);
    out
}

/// Analytical derivatives of the internal energy with respect to every
/// trainable parameter:
///
/// ```text
/// ∂E/∂W_ij = -cos(φ_i - φ_j)
/// ∂E/∂h_i  = -cos(φ_i - ψ_i)
/// ∂E/∂ψ_i  = -h_i sin(φ_i - ψ_i)
/// ```
pub fn parameter_gradients_into(
    phases: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
    out: &mut ParameterGradients,
) {
    debug_assert_eq!(phases.len(), topology.n_units());
    for (k, &(i, j)) in topology.pairs_raw().iter().enumerate() {
        out.weights[k] = -(phases[i as usize] - phases[j as usize]).cos();
    }
    let n_in = topology.n_inputs();
    for k in 0..topology.n_free() {
        let delta = phases[n_in + k] - params.bias_angles[k];
        out.bias_strengths[k] = -delta.cos();
        out.bias_angles[k] = -params.bias_strengths[k] * delta.sin();
    }
}

/// Analytical parameter derivatives; see [`parameter_gradients_into`].
pub fn parameter_gradients(
    phases: &[f64],
    params: &ModelParameters,
    topology: &NetworkTopology,
) -> ParameterGradients {
    let mut out = ParameterGradients::zeros(topology);
    parameter_gradients_into(phases, params, topology, &mut out);
    out
}

/// Difference between the quantum-overlap loss `L = -Σ log(½(1 + cos Δ))` and
/// `C + n_outputs ln 2`; zero up to floating-point rounding for any
/// configuration, since the two expressions are algebraically identical.
pub fn fidelity_identity_check(output_phases: &[f64], target_phases: &[f64]) -> f64 {
    assert_eq!(
        output_phases.len(),
        target_phases.len(),
        "output/target length mismatch"
    );
    let overlap_loss: f64 = output_phases
        .iter()
        .zip(target_phases)
        .map(|(&p, &t)| -(0.5 * (1.0 + (p - t).cos())).max(0.5 * LOG_CLAMP_EPS).ln())
        .sum();
    let n = output_phases.len() as f64;
    overlap_loss - (cost(output_phases, target_phases) + n * std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn two_unit_setup() -> (NetworkTopology, ModelParameters) {
        let topo = NetworkTopology::all_to_all(1, 0, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        params.weights[0] = 1.0;
        (topo, params)
    }

    #[test]
    fn coupling_energy_analytic() {
        let (topo, params) = two_unit_setup();
        let e = internal_energy(&[0.0, PI / 3.0], &params, &topo);
        assert!((e - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn bias_energy_analytic() {
        // single biased unit, no couplings: the "input" unit carries no bias
        let topo = NetworkTopology::all_to_all(1, 0, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        params.bias_strengths[0] = 2.0;
        let e = internal_energy(&[0.0, 0.0], &params, &topo);
        assert!((e - (-2.0)).abs() < 1e-15);
    }

    #[test]
    fn distance_analytic_values() {
        assert_eq!(distance(&[0.7], &[0.7]), 0.0);
        assert!((distance(&[PI], &[0.0]) - 2.0).abs() < 1e-12);
        assert!((distance(&[PI / 2.0], &[0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn distance_rejects_length_mismatch() {
        distance(&[0.0, 1.0], &[0.0]);
    }

    #[test]
    fn cost_analytic_values() {
        assert!((cost(&[0.3], &[0.3]) - (-LN_2)).abs() < 1e-12);
        assert!(cost(&[PI / 2.0], &[0.0]).abs() < 1e-12);
        // antipodal phases hit the clamp
        let c = cost(&[PI], &[0.0]);
        assert!((c - (-LOG_CLAMP_EPS.ln())).abs() < 1e-9);
        assert!(c.is_finite());
    }

    #[test]
    fn synchronized_state_has_zero_gradient() {
        let topo = NetworkTopology::all_to_all(1, 2, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        for w in params.weights.iter_mut() {
            *w = 0.8;
        }
        let g = phase_gradient(&[1.1; 4], &params, &topo, 0.0, None);
        assert!(g.iter().all(|&gi| gi.abs() < 1e-15));
    }

    #[test]
    fn two_unit_gradient_analytic() {
        let (topo, params) = two_unit_setup();
        let g = phase_gradient(&[0.0, PI / 2.0], &params, &topo, 0.0, None);
        assert_eq!(g[0], 0.0); // clamped input entry
        assert!((g[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "requires target phases")]
    fn nudged_gradient_requires_targets() {
        let (topo, params) = two_unit_setup();
        phase_gradient(&[0.0, 0.0], &params, &topo, 0.1, None);
    }

    #[test]
    fn parameter_gradient_analytic_values() {
        let topo = NetworkTopology::all_to_all(1, 1, 1).unwrap();
        let mut params = ModelParameters::zeros(&topo);
        params.weights.fill(0.5);
        params.bias_angles[1] = 0.4;
        let phases = [0.2, 0.2, 0.9];
        let g = parameter_gradients(&phases, &params, &topo);
        // equal phases on pair {0,1}
        let k01 = topo.pair_index(0, 1).unwrap();
        assert!((g.weights[k01] - (-1.0)).abs() < 1e-15);
        // h = 0 makes the bias-angle gradient vanish
        assert_eq!(g.bias_angles[0], 0.0);
        assert!((g.bias_strengths[1] - (-(0.9f64 - 0.4).cos())).abs() < 1e-15);
    }

    #[test]
    fn fidelity_identity_examples() {
        let r = fidelity_identity_check(&[0.3; 10], &[0.3; 10]);
        assert!(r.abs() < 1e-12);
        let r = fidelity_identity_check(&[0.1, -2.0, 1.4], &[-0.4, 0.9, 2.2]);
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn total_energy_combines_terms() {
        let (topo, params) = two_unit_setup();
        let phases = [0.0, 0.4];
        let b = total_energy(&phases, &params, &topo, 0.25, Some(&[0.9]));
        assert!((b.total - (b.internal + 0.25 * b.cost)).abs() < 1e-15);
        assert!((b.internal - internal_energy(&phases, &params, &topo)).abs() < 1e-15);
        assert!((b.cost - cost(&[0.4], &[0.9])).abs() < 1e-15);
    }
}
