//! Experiment configuration: TOML file, CLI overrides, per-task defaults.
//!
//! A config file only needs the fields that differ from the task defaults;
//! [`resolve`] fills in the rest and validates the combination. The run
//! manifest is a fully resolved config document, so `run --config
//! manifest.toml` reproduces a run exactly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

use kuramoto_ep::dynamics::IntegratorConfig;
use kuramoto_ep::topology::NetworkTopology;
use kuramoto_ep::trainer::InitScheme;

/// Environment variable overriding the output directory.
pub const OUTDIR_ENV: &str = "KURAMOTO_EP_OUTDIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Toml {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Xor,
    Digits,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Xor => write!(f, "xor"),
            TaskKind::Digits => write!(f, "digits"),
        }
    }
}

impl TaskKind {
    pub fn n_inputs(self) -> usize {
        match self {
            TaskKind::Xor => 2,
            TaskKind::Digits => 64,
        }
    }

    pub fn n_outputs(self) -> usize {
        match self {
            TaskKind::Xor => 1,
            TaskKind::Digits => 10,
        }
    }

    pub fn init_scheme(self) -> InitScheme {
        match self {
            TaskKind::Xor => InitScheme::Xor,
            TaskKind::Digits => InitScheme::Digits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologySpec {
    AllToAll { units: usize },
    Layered { layers: Vec<usize> },
}

/// Largest supported network; far above the biggest configured experiment.
pub const MAX_UNITS: usize = 1024;

impl TopologySpec {
    pub fn build(&self, task: TaskKind) -> Result<NetworkTopology, ConfigError> {
        let (n_in, n_out) = (task.n_inputs(), task.n_outputs());
        let total = match self {
            TopologySpec::AllToAll { units } => Some(*units),
            TopologySpec::Layered { layers } => layers
                .iter()
                .try_fold(0usize, |acc, &s| acc.checked_add(s)),
        };
        if total.is_none_or(|t| t > MAX_UNITS) {
            return Err(ConfigError::Invalid(format!(
                "networks above {MAX_UNITS} units are not supported"
            )));
        }
        match self {
            TopologySpec::AllToAll { units } => {
                if *units < n_in + n_out {
                    return Err(ConfigError::Invalid(format!(
                        "{task} needs at least {} units ({n_in} inputs + {n_out} outputs), got {units}",
                        n_in + n_out
                    )));
                }
                NetworkTopology::all_to_all(n_in, units - n_in - n_out, n_out)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            TopologySpec::Layered { layers } => {
                if layers.first() != Some(&n_in) || layers.last() != Some(&n_out) {
                    return Err(ConfigError::Invalid(format!(
                        "{task} needs layers starting at {n_in} and ending at {n_out}, got {layers:?}"
                    )));
                }
                NetworkTopology::layered(layers).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub beta: f64,
    pub eta: f64,
    pub m_init: usize,
    pub m_data: usize,
    pub iterations: usize,
    pub eval_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub horizon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub equilibrium_grad_tol: f64,
    pub early_exit: bool,
}

impl From<IntegratorSettings> for IntegratorConfig {
    fn from(s: IntegratorSettings) -> Self {
        IntegratorConfig {
            horizon: s.horizon,
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            initial_step: s.initial_step,
            max_step: s.max_step,
            min_step: s.min_step,
            equilibrium_grad_tol: s.equilibrium_grad_tol,
            early_exit: s.early_exit,
        }
    }
}

impl IntegratorSettings {
    /// Reference tolerances (also the library defaults).
    pub fn tight() -> Self {
        let d = IntegratorConfig::default();
        IntegratorSettings {
            horizon: d.horizon,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            initial_step: d.initial_step,
            max_step: d.max_step,
            min_step: d.min_step,
            equilibrium_grad_tol: d.equilibrium_grad_tol,
            early_exit: d.early_exit,
        }
    }

    /// Training-grade tolerances for the large digit networks: equilibria
    /// resolved to ~1e-3, which is far below the β-sized nudge displacement
    /// the gradient estimate compares, at roughly a third of the cost.
    pub fn training_grade() -> Self {
        IntegratorSettings {
            rel_tol: 1e-4,
            abs_tol: 1e-6,
            equilibrium_grad_tol: 1e-3,
            ..Self::tight()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    /// Random initializations per test sample at inference time.
    pub m_init: usize,
    /// Iterations at which confusion matrices are exported (digits).
    pub confusion_checkpoints: Vec<usize>,
}

/// Fully resolved experiment configuration. Together with the seed it
/// determines a run completely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub replicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    pub topology: TopologySpec,
    pub train: TrainSettings,
    pub integrator: IntegratorSettings,
    pub eval: EvalSettings,
}

/// Partially specified config as read from a file; unset fields fall back to
/// task defaults. CLI flags are applied on top via [`Overrides`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub task: Option<TaskKind>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub replicates: Option<usize>,
    pub data_path: Option<PathBuf>,
    pub topology: Option<TopologySpec>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub eval: EvalSection,
    /// Manifest metadata; ignored when a manifest is re-used as a config.
    #[serde(default)]
    pub meta: Option<toml::Value>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub m_init: Option<usize>,
    pub m_data: Option<usize>,
    pub iterations: Option<usize>,
    pub eval_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub horizon: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub min_step: Option<f64>,
    pub equilibrium_grad_tol: Option<f64>,
    pub early_exit: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub m_init: Option<usize>,
    pub confusion_checkpoints: Option<Vec<usize>>,
}

/// CLI flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<TaskKind>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub replicates: Option<usize>,
    pub data_path: Option<PathBuf>,
    pub units: Option<usize>,
    pub layers: Option<Vec<usize>>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub m_init: Option<usize>,
    pub m_data: Option<usize>,
    pub iterations: Option<usize>,
    pub eval_every: Option<usize>,
    pub eval_m_init: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub grad_tol: Option<f64>,
    pub horizon: Option<f64>,
    pub no_early_exit: bool,
}

pub fn load_config_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let content = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&content).map_err(|source| ConfigError::Toml {
        path: path.to_path_buf(),
        source: Box::new(source),
    })
}

/// Merge file values and flag overrides, fill per-task defaults, validate.
pub fn resolve(file: ConfigFile, flags: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let task = flags
        .task
        .or(file.task)
        .ok_or_else(|| ConfigError::Invalid("no task given (use --task xor|digits)".into()))?;
    let seed = flags.seed.or(file.seed).unwrap_or(0);

    let topology = if let Some(units) = flags.units {
        TopologySpec::AllToAll { units }
    } else if let Some(layers) = flags.layers.clone() {
        TopologySpec::Layered { layers }
    } else if let Some(spec) = file.topology {
        spec
    } else {
        match task {
            TaskKind::Xor => TopologySpec::AllToAll { units: 5 },
            TaskKind::Digits => TopologySpec::Layered {
                layers: vec![64, 20, 10],
            },
        }
    };
    if flags.units.is_some() && flags.layers.is_some() {
        return Err(ConfigError::Invalid(
            "--units and --layers are mutually exclusive".into(),
        ));
    }

    let default_m_data = match task {
        TaskKind::Xor => 4,
        TaskKind::Digits => 300,
    };
    let default_eval_every = match task {
        TaskKind::Xor => 0,
        TaskKind::Digits => 25,
    };
    let train = TrainSettings {
        beta: flags.beta.or(file.train.beta).unwrap_or(0.1),
        eta: flags.eta.or(file.train.eta).unwrap_or(0.1),
        m_init: flags.m_init.or(file.train.m_init).unwrap_or(1),
        m_data: flags.m_data.or(file.train.m_data).unwrap_or(default_m_data),
        iterations: flags
            .iterations
            .or(file.train.iterations)
            .unwrap_or(1000),
        eval_every: flags
            .eval_every
            .or(file.train.eval_every)
            .unwrap_or(default_eval_every),
    };

    let base_integrator = match task {
        TaskKind::Xor => IntegratorSettings::tight(),
        TaskKind::Digits => IntegratorSettings::training_grade(),
    };
    let fi = &file.integrator;
    let integrator = IntegratorSettings {
        horizon: flags.horizon.or(fi.horizon).unwrap_or(base_integrator.horizon),
        rel_tol: flags.rel_tol.or(fi.rel_tol).unwrap_or(base_integrator.rel_tol),
        abs_tol: flags.abs_tol.or(fi.abs_tol).unwrap_or(base_integrator.abs_tol),
        initial_step: fi.initial_step.unwrap_or(base_integrator.initial_step),
        max_step: fi.max_step.unwrap_or(base_integrator.max_step),
        min_step: fi.min_step.unwrap_or(base_integrator.min_step),
        equilibrium_grad_tol: flags
            .grad_tol
            .or(fi.equilibrium_grad_tol)
            .unwrap_or(base_integrator.equilibrium_grad_tol),
        early_exit: if flags.no_early_exit {
            false
        } else {
            fi.early_exit.unwrap_or(true)
        },
    };

    let eval = EvalSettings {
        m_init: flags.eval_m_init.or(file.eval.m_init).unwrap_or(1),
        confusion_checkpoints: file
            .eval
            .confusion_checkpoints
            .unwrap_or_else(|| vec![0, 10, 50, 100, 1000]),
    };

    let output_dir = std::env::var_os(OUTDIR_ENV)
        .map(PathBuf::from)
        .or(flags.output_dir.clone())
        .or(file.output_dir)
        .unwrap_or_else(|| PathBuf::from(format!("runs/{task}-seed{seed}")));

    let config = ExperimentConfig {
        task,
        seed,
        output_dir,
        replicates: flags.replicates.or(file.replicates).unwrap_or(1),
        data_path: flags.data_path.clone().or(file.data_path),
        topology,
        train,
        integrator,
        eval,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    config.topology.build(config.task)?;
    if config.replicates == 0 {
        return Err(ConfigError::Invalid("replicates must be at least 1".into()));
    }
    if !(config.train.beta > 0.0) {
        return Err(ConfigError::Invalid("beta must be positive".into()));
    }
    if config.train.m_init == 0 || config.eval.m_init == 0 {
        return Err(ConfigError::Invalid("m_init must be at least 1".into()));
    }
    match config.task {
        TaskKind::Xor => {
            if config.train.m_data != 4 {
                return Err(ConfigError::Invalid(
                    "the XOR task trains on its 4 canonical samples; m_data must be 4".into(),
                ));
            }
        }
        TaskKind::Digits => {
            if config.train.m_data == 0 || config.train.m_data % 10 != 0 {
                return Err(ConfigError::Invalid(
                    "digits batches are class-balanced; m_data must be a positive multiple of 10"
                        .into(),
                ));
            }
            let path = config.data_path.as_ref().ok_or_else(|| {
                ConfigError::Invalid("the digits task needs --data <dataset file>".into())
            })?;
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!(
                    "dataset file not found: {}",
                    path.display()
                )));
            }
        }
    }
    let integ: IntegratorConfig = config.integrator.into();
    integ
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(())
}

/// Serialize the resolved config (plus tool metadata) as the run manifest.
pub fn manifest_toml(config: &ExperimentConfig) -> String {
    #[derive(Serialize)]
    struct Meta<'a> {
        tool: &'a str,
        version: &'a str,
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        #[serde(flatten)]
        config: &'a ExperimentConfig,
        meta: Meta<'a>,
    }
    toml::to_string_pretty(&Manifest {
        config,
        meta: Meta {
            tool: "kuramoto-ep",
            version: env!("CARGO_PKG_VERSION"),
        },
    })
    .expect("manifest serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_flags() -> Overrides {
        Overrides {
            task: Some(TaskKind::Xor),
            ..Overrides::default()
        }
    }

    #[test]
    fn xor_defaults_resolve() {
        let config = resolve(ConfigFile::default(), &xor_flags()).unwrap();
        assert_eq!(config.topology, TopologySpec::AllToAll { units: 5 });
        assert_eq!(config.train.m_data, 4);
        assert_eq!(config.train.eta, 0.1);
        assert_eq!(config.replicates, 1);
    }

    #[test]
    fn flags_override_file_values() {
        let file: ConfigFile = toml::from_str(
            r#"
            task = "xor"
            seed = 3
            [train]
            eta = 0.05
            "#,
        )
        .unwrap();
        let flags = Overrides {
            seed: Some(9),
            eta: Some(0.2),
            ..Overrides::default()
        };
        let config = resolve(file, &flags).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.train.eta, 0.2);
    }

    #[test]
    fn digits_requires_dataset() {
        let flags = Overrides {
            task: Some(TaskKind::Digits),
            ..Overrides::default()
        };
        let err = resolve(ConfigFile::default(), &flags).unwrap_err();
        assert!(err.to_string().contains("--data"));
    }

    #[test]
    fn xor_batch_size_is_pinned() {
        let flags = Overrides {
            m_data: Some(8),
            ..xor_flags()
        };
        assert!(resolve(ConfigFile::default(), &flags).is_err());
    }

    #[test]
    fn topology_task_mismatch_is_rejected() {
        let flags = Overrides {
            layers: Some(vec![3, 4, 1]),
            ..xor_flags()
        };
        assert!(resolve(ConfigFile::default(), &flags).is_err());
        let flags = Overrides {
            units: Some(2),
            ..xor_flags()
        };
        assert!(resolve(ConfigFile::default(), &flags).is_err());
    }

    #[test]
    fn manifest_round_trips_through_config_loader() {
        let config = resolve(ConfigFile::default(), &xor_flags()).unwrap();
        let manifest = manifest_toml(&config);
        let reloaded: ConfigFile = toml::from_str(&manifest).unwrap();
        let config2 = resolve(reloaded, &Overrides::default()).unwrap();
        assert_eq!(config, config2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let result: Result<ConfigFile, _> = toml::from_str("tsak = \"xor\"");
        assert!(result.is_err());
    }
}
