use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use kuramoto_ep::checkpoint;
use kuramoto_ep::dynamics::{enumerate_equilibria, relax_observed, IntegratorConfig};
use kuramoto_ep::model::PhaseConfiguration;
use kuramoto_ep::tasks::XorTask;
use kuramoto_ep_cli::config::{self, ConfigFile, Overrides, TaskKind};
use kuramoto_ep_cli::experiment::{eval_checkpoint, run_experiment, RunError};
use kuramoto_ep_cli::sweep::{run_sweep, SweepAxis};

#[derive(Parser)]
#[command(
    name = "kuramoto-ep",
    version,
    about = "Train networks of coupled phase oscillators with equilibrium propagation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training experiment and write its artifacts.
    Run(RunArgs),
    /// Run replicated experiments along one hyperparameter axis.
    Sweep(SweepArgs),
    /// Evaluate a checkpoint on the test split of a digits dataset.
    Eval(EvalArgs),
    /// Enumerate the stable fixed points of a checkpointed network for one input.
    InspectEquilibria(InspectArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    task: Option<TaskKind>,
    /// All-to-all topology with this many units in total.
    #[arg(long, conflicts_with = "layers")]
    units: Option<usize>,
    /// Layered topology, e.g. 64,20,10.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nudge strength β.
    #[arg(long)]
    beta: Option<f64>,
    /// Learning rate η.
    #[arg(long)]
    eta: Option<f64>,
    /// Random phase initializations per sample and iteration.
    #[arg(long)]
    m_init: Option<usize>,
    /// Batch size (XOR is fixed at 4).
    #[arg(long)]
    m_data: Option<usize>,
    /// Digits batch size per digit class (m_data = 10 x this).
    #[arg(long, conflicts_with = "m_data")]
    batch_per_digit: Option<usize>,
    /// Dataset file (digits task).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (env KURAMOTO_EP_OUTDIR overrides).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Random initializations per test sample at evaluation time.
    #[arg(long)]
    eval_m_init: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Equilibrium residual-gradient tolerance.
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Integration horizon T.
    #[arg(long)]
    horizon: Option<f64>,
    /// Always integrate to the horizon instead of exiting at equilibrium.
    #[arg(long)]
    no_early_exit: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            task: self.task,
            seed: self.seed,
            output_dir: self.out.clone(),
            replicates: self.replicates,
            data_path: self.data.clone(),
            units: self.units,
            layers: self.layers.clone(),
            beta: self.beta,
            eta: self.eta,
            m_init: self.m_init,
            m_data: self.m_data.or(self.batch_per_digit.map(|p| p * 10)),
            iterations: self.iterations,
            eval_every: self.eval_every,
            eval_m_init: self.eval_m_init,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            grad_tol: self.grad_tol,
            horizon: self.horizon,
            no_early_exit: self.no_early_exit,
        }
    }

    fn resolve(&self) -> Result<config::ExperimentConfig, RunError> {
        let file = match &self.config {
            Some(path) => {
                config::load_config_file(path).map_err(|e| RunError::Config(e.to_string()))?
            }
            None => ConfigFile::default(),
        };
        config::resolve(file, &self.overrides()).map_err(|e| RunError::Config(e.to_string()))
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Hyperparameter to sweep.
    #[arg(long, value_enum)]
    axis: SweepAxis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    m_init: usize,
    /// Directory for the confusion-matrix export.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Comma-separated input phases (radians).
    #[arg(long, value_delimiter = ',', conflicts_with = "xor_input")]
    input_phases: Option<Vec<f64>>,
    /// Use the inputs of the k-th canonical XOR sample (0..=3).
    #[arg(long)]
    xor_input: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1e-2)]
    cluster_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the trajectory of one extra relaxation to this file.
    #[arg(long)]
    dump_trajectory: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Eval(args) => cmd_eval(args),
        Command::InspectEquilibria(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), RunError> {
    let config = args.resolve()?;
    let report = run_experiment(&config)?;
    for summary in &report.replicates {
        println!(
            "replicate {}: final mean distance {}  best accuracy {}",
            summary.replicate,
            summary
                .final_mean_distance
                .map_or("-".into(), |d| format!("{d:.6e}")),
            summary
                .best_accuracy
                .map_or("-".into(), |a| format!("{a:.4}")),
        );
    }
    println!("artifacts in {}", report.out_dir.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), RunError> {
    let config = args.run.resolve()?;
    let report = run_sweep(&config, args.axis, &args.values)?;
    println!("{:>10}  {:>6}  {:>12}  {:>12}", args.axis.to_string(), "runs", "speed", "speed/Minit");
    for point in &report.points {
        println!(
            "{:>10}  {:>6}  {:>12.5e}  {:>12.5e}",
            point.value,
            point.report.replicates.len(),
            point.mean_speed(),
            point.mean_normalized_speed(),
        );
    }
    println!("summary in {}", config.output_dir.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), RunError> {
    let (accuracy, confusion) = eval_checkpoint(
        &args.checkpoint,
        &args.data,
        args.seed,
        args.m_init,
        IntegratorConfig::default(),
        args.out.as_deref(),
    )?;
    println!("test accuracy: {accuracy:.4}");
    println!("{confusion}");
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<(), RunError> {
    let (topology, params) =
        checkpoint::load(&args.checkpoint).map_err(|e| RunError::Config(e.to_string()))?;
    let inputs: Vec<f64> = match (&args.input_phases, args.xor_input) {
        (Some(phases), None) => phases.clone(),
        (None, Some(k)) => {
            let task = XorTask::new();
            let sample = task
                .samples()
                .get(k)
                .ok_or_else(|| RunError::Config("--xor-input must be 0..=3".into()))?;
            sample.input_phases.clone()
        }
        _ => {
            return Err(RunError::Config(
                "give exactly one of --input-phases or --xor-input".into(),
            ))
        }
    };
    if inputs.len() != topology.n_inputs() {
        return Err(RunError::Config(format!(
            "{} input phases given, network has {} input units",
            inputs.len(),
            topology.n_inputs()
        )));
    }
    if args.trials == 0 {
        return Err(RunError::Config("--trials must be at least 1".into()));
    }

    let integrator = IntegratorConfig::default();
    if let Some(path) = &args.dump_trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut init = PhaseConfiguration::zeros(topology.n_units());
        init.phases[..inputs.len()].copy_from_slice(&inputs);
        for p in init.phases[inputs.len()..].iter_mut() {
            *p = rng.random_range(-PI..PI);
        }
        let mut snapshots = Vec::new();
        relax_observed(
            &init,
            &params,
            &topology,
            0.0,
            None,
            &integrator,
            &inputs,
            |t, y| snapshots.push((t, y.to_vec())),
        )
        .map_err(|e| RunError::Runtime(e.to_string()))?;
        let file = std::fs::File::create(path).map_err(|e| RunError::Runtime(e.to_string()))?;
        kuramoto_ep::dynamics::write_trajectory(file, &snapshots)
            .map_err(|e| RunError::Runtime(e.to_string()))?;
        println!("trajectory ({} snapshots) written to {}", snapshots.len(), path.display());
    }

    let census = enumerate_equilibria(
        &params,
        &topology,
        &inputs,
        args.trials,
        args.cluster_tol,
        args.seed,
        &integrator,
    )
    .map_err(|e| RunError::Runtime(e.to_string()))?;
    println!(
        "{} trials: {} distinct equilibria ({} non-converged, {} failed)",
        args.trials,
        census.clusters.len(),
        census.non_converged,
        census.failed_trials
    );
    for (idx, cluster) in census.clusters.iter().enumerate() {
        let canonical = cluster.representative.canonicalized();
        let outputs: Vec<String> = canonical
            .output_phases(&topology)
            .iter()
            .map(|p| format!("{p:+.4}"))
            .collect();
        println!(
            "cluster {idx}: basin count {:>4}  outputs [{}]",
            cluster.count,
            outputs.join(", ")
        );
        println!("  phases: {:?}", canonical.phases);
    }
    Ok(())
}
