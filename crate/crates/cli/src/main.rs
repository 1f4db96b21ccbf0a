//! Command-line front end for training, evaluating and probing EM-PINNs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use empinn_core::harness::{
    default_toggles, evaluate_run, generate_reference, run_ablation, run_experiment_with, run_probe, ExperimentConfig,
    ProbeSettings, ProbeStatus, RunRecord, SeedStatus, Toggle,
};
use empinn_core::pde::{PdeProblem, ProblemKind};
use empinn_core::reference::SpectralConfig;
use empinn_core::Error;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "empinn", version, about = "Element-wise multiplication PINN solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a config file or preset and score against the reference.
    Train {
        /// TOML or JSON config; omit when using --preset.
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Exit with status 3 unless the best seed reaches this relative L2.
        #[arg(long, value_name = "REL_L2")]
        check: Option<f64>,
    },
    /// Re-score the saved parameters of a finished run.
    Evaluate {
        run_dir: PathBuf,
        #[arg(long, value_name = "REL_L2")]
        check: Option<f64>,
    },
    /// Run every on/off combination of the given toggles.
    Ablate {
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated: fourier_feature, adf, periodic_embedding,
        /// time_embedding. Defaults to the problem's standard table.
        #[arg(long, value_delimiter = ',')]
        toggles: Vec<String>,
        /// Exit with status 3 unless all-on is best and all-off is worst.
        #[arg(long)]
        check: bool,
    },
    /// Derivative spread of fresh linear-regime MLP and EM nets.
    Probe {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8])]
        depths: Vec<usize>,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value = "0..5")]
        seed: String,
        /// Zero the second factor of every EM Hadamard product.
        #[arg(long)]
        degenerate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 unless the nets separate.
        #[arg(long)]
        check: bool,
    },
    /// Write a reference grid, e.g. `gen-ref allen_cahn modes=65536,steps_per_slice=160`.
    GenRef {
        problem: String,
        /// Spectral resolution as comma-separated key=value pairs.
        grid_spec: Option<String>,
        #[arg(long, default_value = "reference.grid")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in config, e.g. helmholtz_desk.
    #[arg(long)]
    preset: Option<String>,
    /// A seed, a comma list, or a range `a..b`.
    #[arg(long)]
    seed: Option<String>,
    /// One seed at a time, fixed reduction order, zero elapsed times.
    #[arg(long)]
    deterministic: bool,
    /// Output directory for config, metrics, grids and parameters.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path assignment, e.g. `train.lbfgs.max_iter=3000`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Do not print metric rows while training.
    #[arg(long)]
    quiet: bool,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Config(format!("cannot read seeds from '{text}'"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn build_config(path: Option<&PathBuf>, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (path, &args.preset) {
        (Some(p), None) => ExperimentConfig::load(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (Some(_), Some(_)) => return Err(Error::Config("give a config file or --preset, not both".into())),
        (None, None) => return Err(Error::Config("a config file or --preset is required".into())),
    };
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = &args.seed {
        cfg.seeds = parse_seeds(s)?;
    }
    if args.deterministic {
        cfg.deterministic = true;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_record(record: &RunRecord) {
    for s in &record.seeds {
        match (s.status, s.rel_l2) {
            (SeedStatus::Diverged { step }, _) => println!("seed {}: diverged at step {step}", s.seed),
            (_, Some(r)) => println!("seed {}: rel_l2 {r:.3e}  max_abs_err {:.3e}", s.seed, s.max_abs_err.unwrap_or(f64::NAN)),
            _ => println!("seed {}: no score", s.seed),
        }
    }
    if let (Some(mean), Some(best)) = (record.mean_rel_l2, record.best_rel_l2) {
        println!("mean rel_l2 {mean:.3e}  best rel_l2 {best:.3e} (seed {})", record.best_seed.unwrap_or(0));
    }
}

fn check_rel_l2(record: &RunRecord, threshold: Option<f64>) -> u8 {
    if record.all_diverged() {
        eprintln!("every seed diverged");
        return EXIT_DIVERGED;
    }
    match threshold {
        Some(t) if !record.best_rel_l2.is_some_and(|b| b <= t) => {
            eprintln!("check failed: best rel_l2 {:?} above {t:e}", record.best_rel_l2);
            EXIT_CHECK
        }
        _ => 0,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Train { config, run, check } => {
            let cfg = build_config(config.as_ref(), &run)?;
            let quiet = run.quiet;
            let progress = move |seed: u64, row: &empinn_core::harness::MetricRow| {
                if !quiet {
                    eprintln!(
                        "seed {seed} step {:>7}  total {:.4e}  l_r {:.3e}  l_ic {:.3e}  l_bc {:.3e}  lr {:.3e}",
                        row.step, row.total, row.l_r, row.l_ic, row.l_bc, row.lr
                    );
                }
            };
            let record = run_experiment_with(&cfg, &progress)?;
            print_record(&record);
            Ok(check_rel_l2(&record, check))
        }
        Command::Evaluate { run_dir, check } => {
            let record = evaluate_run(&run_dir)?;
            print_record(&record);
            Ok(check_rel_l2(&record, check))
        }
        Command::Ablate {
            config,
            run,
            toggles,
            check,
        } => {
            let cfg = build_config(config.as_ref(), &run)?;
            let toggles: Vec<Toggle> = if toggles.is_empty() {
                default_toggles(cfg.problem.kind())
            } else {
                toggles.iter().map(|t| t.parse()).collect::<Result<_, _>>()?
            };
            let table = run_ablation(&cfg, &toggles)?;
            print!("{}", table.to_csv());
            if table.rows.iter().all(|r| r.record.all_diverged()) {
                return Ok(EXIT_DIVERGED);
            }
            if check {
                let means: Vec<f64> = table
                    .rows
                    .iter()
                    .map(|r| r.record.mean_rel_l2.unwrap_or(f64::INFINITY))
                    .collect();
                let first = means[0];
                let last = *means.last().expect("at least one row");
                let ordered = means.iter().all(|&m| first <= m && m <= last);
                if !ordered {
                    eprintln!("check failed: all-on is not best or all-off is not worst");
                    return Ok(EXIT_CHECK);
                }
            }
            Ok(0)
        }
        Command::Probe {
            depths,
            width,
            seed,
            degenerate,
            out,
            check,
        } => {
            let settings = ProbeSettings {
                depths,
                width,
                seeds: parse_seeds(&seed)?,
                degenerate,
                ..ProbeSettings::default()
            };
            let report = run_probe(&settings)?;
            print!("{}", report.to_csv());
            println!("status: {:?}", report.status);
            if let Some(out) = out {
                std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
                let path = out.join("probe.csv");
                std::fs::write(&path, report.to_csv()).map_err(|e| Error::Io { path, source: e })?;
            }
            Ok(if check && report.status != ProbeStatus::Separated { EXIT_CHECK } else { 0 })
        }
        Command::GenRef { problem, grid_spec, out } => {
            let kind: ProblemKind = problem.parse()?;
            let mut spectral = SpectralConfig::default();
            if let Some(spec) = grid_spec {
                let mut doc = serde_json::to_value(&spectral).map_err(|e| Error::Config(e.to_string()))?;
                for pair in spec.split(',') {
                    let (k, v) = pair
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("grid spec entry '{pair}' is not key=value")))?;
                    let v: u64 = v.trim().parse().map_err(|_| Error::Config(format!("'{v}' is not a count")))?;
                    match doc.get_mut(k.trim()) {
                        Some(slot) => *slot = v.into(),
                        None => return Err(Error::Config(format!("unknown grid spec key '{k}'"))),
                    }
                }
                spectral = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
            }
            let field = generate_reference(&PdeProblem::for_kind(kind), &spectral, &out)?;
            let (n0, n1) = field.shape();
            println!("wrote {n0}x{n1} {} reference to {}", kind.name(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Diverged { .. } | Error::NonFinite => EXIT_DIVERGED,
                _ => EXIT_CONFIG,
            })
        }
    }
}
