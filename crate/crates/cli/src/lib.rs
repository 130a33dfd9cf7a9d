//! Experiment front end for equilibrium-propagation training of coupled
//! phase-oscillator networks: configuration handling, run orchestration and
//! parameter sweeps. The `kuramoto-ep` binary is a thin wrapper over this
//! library.

pub mod config;
pub mod experiment;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides, TaskKind, TopologySpec};
pub use experiment::{run_experiment, RunError, RunReport, RunSummary};
pub use sweep::{run_sweep, SweepAxis, SweepReport};
