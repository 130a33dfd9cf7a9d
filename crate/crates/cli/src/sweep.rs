//! Parameter sweeps: replicated experiments along one axis with aggregated
//! learning-speed statistics.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write as _;

use crate::config::{ExperimentConfig, TopologySpec};
use crate::experiment::{run_experiment, RunError, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum SweepAxis {
    #[value(name = "n_units")]
    NUnits,
    #[value(name = "m_init")]
    MInit,
    #[value(name = "beta")]
    Beta,
    #[value(name = "eta")]
    Eta,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SweepAxis::NUnits => "n_units",
            SweepAxis::MInit => "m_init",
            SweepAxis::Beta => "beta",
            SweepAxis::Eta => "eta",
        };
        write!(f, "{name}")
    }
}

/// One sweep point: the axis value and its per-replicate outcomes.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub report: RunReport,
}

impl SweepPoint {
    pub fn speeds(&self) -> Vec<f64> {
        self.report
            .replicates
            .iter()
            .filter_map(|r| r.learning_speed)
            .collect()
    }

    pub fn normalized_speeds(&self) -> Vec<f64> {
        self.report
            .replicates
            .iter()
            .filter_map(|r| r.normalized_speed)
            .collect()
    }

    pub fn mean_speed(&self) -> f64 {
        mean(&self.speeds())
    }

    pub fn sem_speed(&self) -> f64 {
        sem(&self.speeds())
    }

    pub fn mean_normalized_speed(&self) -> f64 {
        mean(&self.normalized_speeds())
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sem(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

fn apply_axis(
    base: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<ExperimentConfig, RunError> {
    let mut config = base.clone();
    match axis {
        SweepAxis::NUnits => {
            let units = value as usize;
            if units as f64 != value {
                return Err(RunError::Config(format!(
                    "n_units sweep values must be integers, got {value}"
                )));
            }
            config.topology = TopologySpec::AllToAll { units };
        }
        SweepAxis::MInit => {
            let m = value as usize;
            if m as f64 != value || m == 0 {
                return Err(RunError::Config(format!(
                    "m_init sweep values must be positive integers, got {value}"
                )));
            }
            config.train.m_init = m;
        }
        SweepAxis::Beta => config.train.beta = value,
        SweepAxis::Eta => config.train.eta = value,
    }
    Ok(config)
}

/// Run replicated experiments for every axis value. Per-run failures abort
/// the affected point but the sweep continues; a summary table is written to
/// the base output directory.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepReport, RunError> {
    if values.is_empty() {
        return Err(RunError::Config("sweep needs at least one value".into()));
    }
    fs::create_dir_all(&base.output_dir).map_err(|e| RunError::Runtime(e.to_string()))?;
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &value in values {
        let mut config = apply_axis(base, axis, value)?;
        config.output_dir = base.output_dir.join(format!("{axis}-{value}"));
        match run_experiment(&config) {
            Ok(report) => points.push(SweepPoint { value, report }),
            Err(RunError::Config(msg)) => return Err(RunError::Config(msg)),
            Err(RunError::Runtime(msg)) => {
                eprintln!("sweep point {axis}={value} failed: {msg}");
                failures.push((value, msg));
            }
        }
    }
    let report = SweepReport { axis, points };
    write_summary(base, &report, &failures).map_err(|e| RunError::Runtime(e.to_string()))?;
    Ok(report)
}

fn write_summary(
    base: &ExperimentConfig,
    report: &SweepReport,
    failures: &[(f64, String)],
) -> std::io::Result<()> {
    let mut runs = fs::File::create(base.output_dir.join("sweep_runs.csv"))?;
    writeln!(
        runs,
        "{},replicate,seed,learning_speed,normalized_speed,final_mean_distance",
        report.axis
    )?;
    for point in &report.points {
        for r in &point.report.replicates {
            writeln!(
                runs,
                "{},{},{},{},{},{}",
                point.value,
                r.replicate,
                r.seed,
                r.learning_speed.map_or(String::new(), |v| v.to_string()),
                r.normalized_speed.map_or(String::new(), |v| v.to_string()),
                r.final_mean_distance
                    .map_or(String::new(), |v| v.to_string()),
            )?;
        }
    }

    let mut summary = fs::File::create(base.output_dir.join("sweep_summary.csv"))?;
    writeln!(
        summary,
        "{},runs,mean_speed,sem_speed,mean_normalized_speed",
        report.axis
    )?;
    for point in &report.points {
        writeln!(
            summary,
            "{},{},{},{},{}",
            point.value,
            point.report.replicates.len(),
            point.mean_speed(),
            point.sem_speed(),
            point.mean_normalized_speed(),
        )?;
    }
    for (value, msg) in failures {
        writeln!(summary, "# failed {}={}: {}", report.axis, value, msg)?;
    }
    Ok(())
}
