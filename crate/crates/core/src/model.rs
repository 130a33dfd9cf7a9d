//! Phase configurations, trainable parameters and training samples.

use std::f64::consts::PI;

use crate::topology::NetworkTopology;

/// Wrap an angle into the canonical interval `[-pi, pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let wrapped = (phi + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land exactly on +pi through rounding
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Circular distance |Δφ| on the unit circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = a - b;
    d.sin().atan2(d.cos()).abs()
}

/// Phase angles of all units, in radians.
///
/// Phases are stored as unconstrained reals; every downstream quantity is
/// 2pi-periodic, so canonicalization is applied only at readout and
/// serialization time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfiguration {
    pub phases: Vec<f64>,
}

impl PhaseConfiguration {
    pub fn new(phases: Vec<f64>) -> Self {
        Self { phases }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phases
    }

    /// Canonical representative with every phase in `[-pi, pi)`.
    pub fn canonicalized(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|&p| wrap_angle(p)).collect(),
        }
    }

    /// Phases of the output units for the given topology.
    pub fn output_phases(&self, topology: &NetworkTopology) -> &[f64] {
        &self.phases[topology.output_start()..]
    }

    /// Maximum per-unit circular distance to another configuration.
    pub fn max_circular_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "configuration lengths differ");
        self.phases
            .iter()
            .zip(&other.phases)
            .map(|(&a, &b)| circular_distance(a, b))
            .fold(0.0, f64::max)
    }
}

/// One supervised example: input phases plus desired output phases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub input_phases: Vec<f64>,
    pub target_phases: Vec<f64>,
}

impl TrainingSample {
    pub fn new(input_phases: Vec<f64>, target_phases: Vec<f64>) -> Self {
        Self {
            input_phases,
            target_phases,
        }
    }

    pub fn matches(&self, topology: &NetworkTopology) -> bool {
        self.input_phases.len() == topology.n_inputs()
            && self.target_phases.len() == topology.n_outputs()
    }
}

/// Trainable parameter set θ = (W, h, ψ).
///
/// Weights are stored once per unordered coupled pair, in the topology's
/// canonical pair order, so `W_ij = W_ji` holds structurally. Bias strengths
/// and bias angles exist exactly for the non-input units; entry `k`
/// corresponds to unit `n_inputs + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub weights: Vec<f64>,
    pub bias_strengths: Vec<f64>,
    pub bias_angles: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(topology: &NetworkTopology) -> Self {
        Self {
            weights: vec![0.0; topology.n_pairs()],
            bias_strengths: vec![0.0; topology.n_free()],
            bias_angles: vec![0.0; topology.n_free()],
        }
    }

    pub fn matches(&self, topology: &NetworkTopology) -> bool {
        self.weights.len() == topology.n_pairs()
            && self.bias_strengths.len() == topology.n_free()
            && self.bias_angles.len() == topology.n_free()
    }

    /// Coupling W_ij; zero for uncoupled pairs.
    pub fn weight(&self, topology: &NetworkTopology, i: usize, j: usize) -> f64 {
        topology
            .pair_index(i, j)
            .map_or(0.0, |k| self.weights[k])
    }

    /// Bias (strength, angle) of a non-input unit.
    pub fn bias(&self, topology: &NetworkTopology, unit: usize) -> (f64, f64) {
        assert!(
            unit >= topology.n_inputs() && unit < topology.n_units(),
            "unit {unit} carries no bias"
        );
        let k = unit - topology.n_inputs();
        (self.bias_strengths[k], self.bias_angles[k])
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias_strengths.len() + self.bias_angles.len()
    }

    /// In-place update θ ← θ + scale · g.
    pub fn add_scaled(&mut self, gradient: &ParameterGradients, scale: f64) {
        debug_assert_eq!(self.weights.len(), gradient.weights.len());
        for (w, g) in self.weights.iter_mut().zip(&gradient.weights) {
            *w += scale * g;
        }
        for (h, g) in self.bias_strengths.iter_mut().zip(&gradient.bias_strengths) {
            *h += scale * g;
        }
        for (psi, g) in self.bias_angles.iter_mut().zip(&gradient.bias_angles) {
            *psi += scale * g;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
            && self.bias_strengths.iter().all(|h| h.is_finite())
            && self.bias_angles.iter().all(|p| p.is_finite())
    }
}

/// Per-parameter derivative structure mirroring [`ModelParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradients {
    pub weights: Vec<f64>,
    pub bias_strengths: Vec<f64>,
    pub bias_angles: Vec<f64>,
}

impl ParameterGradients {
    pub fn zeros(topology: &NetworkTopology) -> Self {
        Self {
            weights: vec![0.0; topology.n_pairs()],
            bias_strengths: vec![0.0; topology.n_free()],
            bias_angles: vec![0.0; topology.n_free()],
        }
    }

    /// In-place accumulation g ← g + scale · other.
    pub fn add_scaled(&mut self, other: &ParameterGradients, scale: f64) {
        debug_assert_eq!(self.weights.len(), other.weights.len());
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += scale * b;
        }
        for (a, b) in self.bias_strengths.iter_mut().zip(&other.bias_strengths) {
            *a += scale * b;
        }
        for (a, b) in self.bias_angles.iter_mut().zip(&other.bias_angles) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self
            .weights
            .iter_mut()
            .chain(self.bias_strengths.iter_mut())
            .chain(self.bias_angles.iter_mut())
        {
            *g *= factor;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.bias_strengths)
            .chain(&self.bias_angles)
            .fold(0.0f64, |m, &g| m.max(g.abs()))
    }
}
