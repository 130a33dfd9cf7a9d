//! Experiment orchestration: run replicated training experiments and write
//! all artifacts (manifest, training log, curves, confusion matrices,
//! checkpoints) under the configured output directory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use kuramoto_ep::checkpoint;
use kuramoto_ep::dynamics::IntegratorConfig;
use kuramoto_ep::metrics::{evaluate_accuracy, learning_speed, SPEED_WINDOW};
use kuramoto_ep::seeds;
use kuramoto_ep::tasks::{load_digits, DigitsBatches, DigitsDataset, XorTask};
use kuramoto_ep::topology::NetworkTopology;
use kuramoto_ep::trainer::{
    init_parameters, train, BatchSource, EvalMetrics, TrainConfig, TrainHooks, TrainOutcome,
    TrainRecord,
};

use crate::config::{ExperimentConfig, TaskKind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    /// Process exit status: 2 for configuration errors, 1 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 1,
        }
    }
}

fn runtime(err: impl std::fmt::Display) -> RunError {
    RunError::Runtime(err.to_string())
}

/// Summary of one replicate.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub replicate: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub final_mean_distance: Option<f64>,
    pub best_accuracy: Option<f64>,
    /// Negative log10-distance slope over the first `min(300, iterations)`
    /// iterations, when the trace allows a fit.
    pub learning_speed: Option<f64>,
    pub normalized_speed: Option<f64>,
    pub records: Vec<TrainRecord>,
}

/// Completed experiment: one summary per replicate.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub replicates: Vec<RunSummary>,
}

/// Validated inputs shared by every replicate.
struct Prepared {
    topology: NetworkTopology,
    dataset: Option<DigitsDataset>,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared, RunError> {
    let topology = config
        .topology
        .build(config.task)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let dataset = match config.task {
        TaskKind::Xor => None,
        TaskKind::Digits => {
            let path = config
                .data_path
                .as_ref()
                .ok_or_else(|| RunError::Config("digits task needs a dataset path".into()))?;
            let ds = load_digits(path).map_err(|e| RunError::Config(e.to_string()))?;
            for warning in &ds.warnings {
                eprintln!("warning: {warning}");
            }
            let per_digit = config.train.m_data / 10;
            let smallest = ds
                .train_by_digit
                .iter()
                .map(Vec::len)
                .min()
                .unwrap_or(0);
            if per_digit > smallest {
                return Err(RunError::Config(format!(
                    "batch of {} per digit exceeds the smallest training class ({smallest})",
                    per_digit
                )));
            }
            Some(ds)
        }
    };
    Ok(Prepared { topology, dataset })
}

/// Run a full experiment: validate, write the manifest, run every replicate
/// and collect summaries. Replicate `k` uses the seed derived from the master
/// seed by index, so a single-replicate run and the first replicate of a
/// multi-replicate run coincide.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, RunError> {
    let prepared = prepare(config)?;

    fs::create_dir_all(&config.output_dir).map_err(runtime)?;
    fs::write(
        config.output_dir.join("manifest.toml"),
        crate::config::manifest_toml(config),
    )
    .map_err(runtime)?;

    let replicate_dirs: Vec<PathBuf> = (0..config.replicates)
        .map(|k| {
            if config.replicates == 1 {
                config.output_dir.clone()
            } else {
                config.output_dir.join(format!("rep{k}"))
            }
        })
        .collect();

    let summaries: Result<Vec<RunSummary>, RunError> = replicate_dirs
        .par_iter()
        .enumerate()
        .map(|(k, dir)| run_replicate(config, &prepared, k, dir))
        .collect();
    Ok(RunReport {
        out_dir: config.output_dir.clone(),
        replicates: summaries?,
    })
}

fn run_replicate(
    config: &ExperimentConfig,
    prepared: &Prepared,
    replicate: usize,
    out_dir: &Path,
) -> Result<RunSummary, RunError> {
    let seed = seeds::derive(config.seed, replicate as u64);
    fs::create_dir_all(out_dir).map_err(runtime)?;
    let ckpt_dir = out_dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(runtime)?;

    let topology = &prepared.topology;
    let integrator: IntegratorConfig = config.integrator.into();
    let train_config = TrainConfig {
        beta: config.train.beta,
        eta: config.train.eta,
        m_init: config.train.m_init,
        m_data: config.train.m_data,
        n_iterations: config.train.iterations,
        rng_seed: seed,
        eval_every: config.train.eval_every,
        extra_eval_iterations: match config.task {
            TaskKind::Digits => config.eval.confusion_checkpoints.clone(),
            TaskKind::Xor => Vec::new(),
        },
        integrator,
    };

    let mut params_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::stream::PARAMS));
    let params = init_parameters(topology, config.task.init_scheme(), &mut params_rng);

    let log_file = fs::File::create(out_dir.join("training_log.jsonl")).map_err(runtime)?;
    let mut log_writer = BufWriter::new(log_file);

    let confusion_dir = out_dir.join("confusion");
    if prepared.dataset.is_some() {
        fs::create_dir_all(&confusion_dir).map_err(runtime)?;
    }

    let started = Instant::now();
    let outcome: TrainOutcome = {
        let test_samples = prepared
            .dataset
            .as_ref()
            .map(|ds| ds.test_samples())
            .unwrap_or_default();
        let mut eval_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::stream::EVAL));
        let eval_m_init = config.eval.m_init;
        let confusion_at = config.eval.confusion_checkpoints.clone();
        let has_dataset = prepared.dataset.is_some();

        let evaluate: Option<Box<dyn FnMut(usize, &kuramoto_ep::ModelParameters) -> EvalMetrics>> =
            if has_dataset {
                let confusion_dir = confusion_dir.clone();
                let integ = integrator;
                let topo = topology.clone();
                Some(Box::new(move |iteration, params| {
                    let outcome = evaluate_accuracy(
                        params,
                        &topo,
                        &test_samples,
                        &integ,
                        &mut eval_rng,
                        eval_m_init,
                    );
                    if confusion_at.contains(&iteration) {
                        let path = confusion_dir.join(format!("iter_{iteration:06}.csv"));
                        if let Err(err) = fs::write(&path, outcome.confusion.to_csv_block(iteration))
                        {
                            eprintln!("warning: confusion export failed: {err}");
                        }
                    }
                    EvalMetrics {
                        test_accuracy: Some(outcome.accuracy),
                        test_error: Some(1.0 - outcome.accuracy),
                    }
                }))
            } else {
                None
            };

        let log = &mut log_writer;
        let mut hooks = TrainHooks {
            evaluate,
            on_record: Some(Box::new(move |record: &TrainRecord| {
                kuramoto_ep::trainer::append_record(&mut *log, record)
                    .expect("training log write failed");
                if record.test_accuracy.is_some() || record.iteration % 200 == 0 {
                    eprintln!(
                        "[rep {replicate}] iter {:>5}  D {}  acc {}  ({:.1}s)",
                        record.iteration,
                        record
                            .mean_distance
                            .map_or("      -".into(), |d| format!("{d:.4e}")),
                        record
                            .test_accuracy
                            .map_or("    -".into(), |a| format!("{a:.3}")),
                        started.elapsed().as_secs_f64()
                    );
                }
            })),
            on_checkpoint: Some(Box::new(|iteration, params| {
                let path = ckpt_dir.join(format!("iter_{iteration:06}.ckpt"));
                if let Err(err) = checkpoint::save(&path, topology, params) {
                    eprintln!("warning: checkpoint write failed: {err}");
                }
            })),
        };

        let source: Box<dyn BatchSource> = match &prepared.dataset {
            Some(ds) => Box::new(DigitsBatches::new(ds)),
            None => Box::new(XorTask::new()),
        };
        train(source.as_ref(), topology, params, &train_config, &mut hooks).map_err(runtime)?
    };
    log_writer.flush().map_err(runtime)?;

    checkpoint::save(out_dir.join("final.ckpt"), topology, &outcome.params).map_err(runtime)?;
    write_curve(&out_dir.join("curve.csv"), &outcome.records).map_err(runtime)?;

    let distances: Vec<f64> = outcome
        .records
        .iter()
        .filter_map(|r| r.mean_distance)
        .collect();
    let window = SPEED_WINDOW.min(distances.len());
    let speed = learning_speed(&distances, window, config.train.m_init).ok();

    Ok(RunSummary {
        replicate,
        seed,
        out_dir: out_dir.to_path_buf(),
        final_mean_distance: outcome.records.last().and_then(|r| r.mean_distance),
        best_accuracy: outcome
            .records
            .iter()
            .filter_map(|r| r.test_accuracy)
            .fold(None, |best, a| Some(best.map_or(a, |b: f64| b.max(a)))),
        learning_speed: speed.map(|s| s.slope),
        normalized_speed: speed.map(|s| s.normalized_slope),
        records: outcome.records,
    })
}

/// Columnar training curve: iteration, mean distance, test error.
fn write_curve(path: &Path, records: &[TrainRecord]) -> std::io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "iteration,mean_distance,test_error")?;
    for r in records {
        let d = r.mean_distance.map_or(String::new(), |d| d.to_string());
        let e = r.test_error.map_or(String::new(), |e| e.to_string());
        writeln!(out, "{},{},{}", r.iteration, d, e)?;
    }
    out.flush()
}

/// Evaluate a checkpoint on the test split of a dataset.
pub fn eval_checkpoint(
    checkpoint_path: &Path,
    data_path: &Path,
    seed: u64,
    m_init: usize,
    integrator: IntegratorConfig,
    out_dir: Option<&Path>,
) -> Result<(f64, String), RunError> {
    let (topology, params) =
        checkpoint::load(checkpoint_path).map_err(|e| RunError::Config(e.to_string()))?;
    if topology.n_outputs() != 10 {
        return Err(RunError::Config(
            "eval needs a 10-output digit network checkpoint".into(),
        ));
    }
    let dataset = load_digits(data_path).map_err(|e| RunError::Config(e.to_string()))?;
    let test = dataset.test_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::stream::EVAL));
    let outcome = evaluate_accuracy(&params, &topology, &test, &integrator, &mut rng, m_init);
    let block = outcome.confusion.to_csv_block(0);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(runtime)?;
        fs::write(dir.join("confusion_eval.csv"), &block).map_err(runtime)?;
    }
    Ok((outcome.accuracy, block))
}
