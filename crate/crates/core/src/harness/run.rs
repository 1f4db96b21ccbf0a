use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::train::{evaluate_on_grid, train_seed_with, MetricRow, SeedStatus, TrainOutcome};
use crate::error::{Error, Result};
use crate::network::{NetworkParams, SavedParams};
use crate::optim::LbfgsStatus;
use crate::par;
use crate::pde::PdeProblem;
use crate::reference::{import_reference, reference_field, GridField, SolutionGrid, SpectralConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub status: SeedStatus,
    pub rel_l2: Option<f64>,
    pub max_abs_err: Option<f64>,
    pub final_metrics: Option<MetricRow>,
    pub lbfgs_status: Option<LbfgsStatus>,
    pub wall_clock_s: f64,
}

/// Summary written to `run.json`. The embedded config is enough to repeat
/// the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedRecord>,
    /// Mean over the seeds that completed.
    pub mean_rel_l2: Option<f64>,
    pub best_rel_l2: Option<f64>,
    pub best_seed: Option<u64>,
}

impl RunRecord {
    fn new(config: ExperimentConfig, seeds: Vec<SeedRecord>) -> Self {
        let done: Vec<(u64, f64)> = seeds.iter().filter_map(|s| s.rel_l2.map(|r| (s.seed, r))).collect();
        let mean_rel_l2 = (!done.is_empty()).then(|| done.iter().map(|d| d.1).sum::<f64>() / done.len() as f64);
        let best = done.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1));
        Self {
            config,
            seeds,
            mean_rel_l2,
            best_rel_l2: best.map(|b| b.1),
            best_seed: best.map(|b| b.0),
        }
    }

    pub fn all_diverged(&self) -> bool {
        self.seeds
            .iter()
            .all(|s| matches!(s.status, SeedStatus::Diverged { .. }))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("run.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Closed-form, imported or spectral reference for the config's problem.
pub fn load_reference(config: &ExperimentConfig) -> Result<GridField> {
    match &config.reference.import {
        Some(path) => import_reference(&config.problem, path),
        None => reference_field(&config.problem, &config.reference.spectral),
    }
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// Trains every seed, scores it against the reference and, when an output
/// directory is set, writes per-seed files and `run.json`.
///
/// A diverged seed is recorded and skipped; the other seeds still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    run_experiment_with(config, &|_, _| {})
}

/// As [`run_experiment`], reporting each metric row as `(seed, row)`.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    progress: &(dyn Fn(u64, &MetricRow) + Sync),
) -> Result<RunRecord> {
    config.validate()?;
    let reference = load_reference(config)?;
    if let Some(out) = &config.output_dir {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let snapshot = config.to_toml()?;
        let path = out.join("config.toml");
        std::fs::write(&path, snapshot).map_err(|e| Error::io(&path, e))?;
    }

    let one_seed = |&seed: &u64| -> Result<SeedRecord> {
        let outcome = train_seed_with(config, seed, |row| progress(seed, row))?;
        finish_seed(config, &reference, outcome)
    };
    let records: Vec<Result<SeedRecord>> = if config.deterministic {
        config.seeds.iter().map(one_seed).collect()
    } else {
        par::map_ordered(&config.seeds, one_seed)
    };
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let record = RunRecord::new(config.clone(), records);
    if let Some(out) = &config.output_dir {
        write_json(&out.join("run.json"), &record)?;
    }
    Ok(record)
}

fn finish_seed(config: &ExperimentConfig, reference: &GridField, outcome: TrainOutcome) -> Result<SeedRecord> {
    let dir = config.output_dir.as_ref().map(|out| seed_dir(out, outcome.seed));
    if let Some(dir) = &dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_metrics(&dir.join("metrics.csv"), &outcome.metrics)?;
    }
    let mut record = SeedRecord {
        seed: outcome.seed,
        status: outcome.status,
        rel_l2: None,
        max_abs_err: None,
        final_metrics: outcome.metrics.last().copied(),
        lbfgs_status: outcome.lbfgs_status,
        wall_clock_s: outcome.wall_clock_s,
    };
    if outcome.status == SeedStatus::Completed {
        let solution = evaluate_on_grid(config, &outcome.params, reference)?;
        record.rel_l2 = Some(solution.rel_l2);
        record.max_abs_err = Some(solution.max_abs_err);
        if let Some(dir) = &dir {
            export_grid(&solution, dir)?;
            write_json(&dir.join("params.json"), &outcome.params.to_saved())?;
        }
    }
    Ok(record)
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut text = String::from(MetricRow::HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::config(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `solution.grid` (the prediction) and `error.grid` (its pointwise
/// absolute error) into `dir`.
pub fn export_grid(solution: &SolutionGrid, dir: &Path) -> Result<()> {
    solution.u_pred.write(&dir.join("solution.grid"))?;
    let err = solution.error();
    err.with_values(err.values().mapv(f64::abs))?
        .write(&dir.join("error.grid"))
}

/// Re-scores the saved parameters of a finished run against a freshly built
/// reference.
pub fn evaluate_run(dir: &Path) -> Result<RunRecord> {
    let stored = RunRecord::read(dir)?;
    let config = stored.config.clone();
    let reference = load_reference(&config)?;
    let mut seeds = Vec::with_capacity(stored.seeds.len());
    for mut rec in stored.seeds {
        if rec.status == SeedStatus::Completed {
            let path = seed_dir(dir, rec.seed).join("params.json");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let saved: SavedParams =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let params = NetworkParams::from_saved(&config.network, saved)?;
            let solution = evaluate_on_grid(&config, &params, &reference)?;
            rec.rel_l2 = Some(solution.rel_l2);
            rec.max_abs_err = Some(solution.max_abs_err);
        }
        seeds.push(rec);
    }
    Ok(RunRecord::new(config, seeds))
}

/// Builds the reference field for `problem` and writes it to `path`.
pub fn generate_reference(problem: &PdeProblem, spectral: &SpectralConfig, path: &Path) -> Result<GridField> {
    let field = reference_field(problem, spectral)?;
    field.write(path)?;
    Ok(field)
}
