//! Training networks of coupled phase oscillators with equilibrium propagation.
//!
//! A network of identical phase oscillators relaxes along the gradient flow of
//! an XY-model energy
//!
//! ```text
//! E(φ; W, h, ψ) = -Σ_{i<j} W_ij cos(φ_i - φ_j) - Σ_i h_i cos(φ_i - ψ_i)
//! ```
//!
//! with a subset of units clamped to input phases. Equilibrium propagation
//! extracts cost gradients from the difference between two equilibria: a free
//! relaxation (no output-target coupling) and a weakly nudged one, where the
//! total energy `F = E + β C` pulls the output phases toward a target
//! configuration. Averaging the per-parameter differences over training samples
//! and over random initial phase configurations handles the multistability of
//! the XY energy landscape.
//!
//! Module map:
//!
//! - [`topology`]: unit roles and connectivity (all-to-all or layered)
//! - [`model`]: phases, trainable parameters, training samples
//! - [`energy`]: energy, cost, and analytical gradients
//! - [`dynamics`]: adaptive RK4 gradient-flow relaxation and equilibrium
//!   enumeration
//! - [`trainer`]: the equilibrium-propagation update loop
//! - [`tasks`]: XOR and 8x8 handwritten-digit task pipelines
//! - [`metrics`]: distances, accuracy, confusion matrices, learning speed
//! - [`checkpoint`]: text checkpoint format for topology + parameters

pub mod checkpoint;
pub mod dynamics;
pub mod energy;
pub mod metrics;
pub mod model;
pub mod seeds;
pub mod tasks;
pub mod topology;
pub mod trainer;

pub use dynamics::{relax, EquilibriumResult, IntegratorConfig};
pub use energy::{cost, distance, internal_energy, parameter_gradients, phase_gradient};
pub use model::{ModelParameters, ParameterGradients, PhaseConfiguration, TrainingSample};
pub use topology::{NetworkTopology, UnitRole};
pub use trainer::{InitScheme, TrainConfig};
