//! End-to-end harness behaviour on small configs.

use std::fs;
use std::path::Path;

use empinn_core::harness::{
    ablation_variants, evaluate_run, generate_reference, run_experiment, ExperimentConfig, RunRecord, SeedStatus,
    Toggle, PRESETS,
};
use empinn_core::network::{Arch, EmbeddingSpec, OutputTransform};
use empinn_core::optim::LbfgsConfig;
use empinn_core::pde::{PdeProblem, SamplingStrategy, ALLEN_CAHN};
use empinn_core::reference::{exact_helmholtz, solve_allen_cahn_reference, GridField, SpectralConfig};

/// Helmholtz preset shrunk to a few seconds of work.
fn tiny_helmholtz(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset("helmholtz_desk").unwrap();
    for o in [
        "network.width=8",
        "train.adam.steps=20",
        "train.log_every=5",
        "train.lbfgs.max_iter=5",
        "collocation.residual=64",
        "collocation.strategy=\"uniform_random\"",
    ] {
        c.apply_override(o).unwrap();
    }
    c.network.embedding = EmbeddingSpec::GaussianFourier { scale: 2.0, num_features: 4 };
    c.seeds = vec![0, 1];
    c.output_dir = Some(out.to_path_buf());
    c.deterministic = true;
    c
}

#[test]
fn untrained_network_scores_order_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny_helmholtz(dir.path());
    c.train.adam.as_mut().unwrap().steps = 0;
    c.train.lbfgs = None;
    let record = run_experiment(&c).unwrap();
    for s in &record.seeds {
        let r = s.rel_l2.unwrap();
        assert!((0.1..10.0).contains(&r), "seed {}: untrained rel_l2 {r}", s.seed);
    }
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&tiny_helmholtz(a.path())).unwrap();
    run_experiment(&tiny_helmholtz(b.path())).unwrap();
    for seed in [0, 1] {
        for file in ["metrics.csv", "solution.grid", "error.grid", "params.json"] {
            let pa = a.path().join(format!("seed_{seed}")).join(file);
            let pb = b.path().join(format!("seed_{seed}")).join(file);
            assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{file} differs for seed {seed}");
        }
    }
    // run.json also holds wall-clock time and the output path, so compare scores only
    let (ra, rb) = (RunRecord::read(a.path()).unwrap(), RunRecord::read(b.path()).unwrap());
    for (x, y) in ra.seeds.iter().zip(&rb.seeds) {
        assert_eq!(x.rel_l2.map(f64::to_bits), y.rel_l2.map(f64::to_bits));
        assert_eq!(x.final_metrics, y.final_metrics);
    }
}

#[test]
fn metrics_csv_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&tiny_helmholtz(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("seed_0/metrics.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,l_ic,l_bc,l_r,total,lr,elapsed_s"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 4);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]), "steps must increase");
    assert!(rows.iter().all(|r| r[6] == 0.0), "deterministic runs record zero elapsed time");
}

#[test]
fn evaluate_reproduces_the_recorded_scores() {
    let dir = tempfile::tempdir().unwrap();
    let record = run_experiment(&tiny_helmholtz(dir.path())).unwrap();
    let again = evaluate_run(dir.path()).unwrap();
    for (a, b) in record.seeds.iter().zip(&again.seeds) {
        assert_eq!(a.rel_l2, b.rel_l2);
    }
    assert_eq!(RunRecord::read(dir.path()).unwrap().best_rel_l2, record.best_rel_l2);
}

#[test]
fn diverged_seeds_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny_helmholtz(dir.path());
    c.train.adam.as_mut().unwrap().initial_lr = 1e300;
    c.train.lbfgs = None;
    let record = run_experiment(&c).unwrap();
    assert!(record.all_diverged());
    assert!(record.seeds.iter().all(|s| matches!(s.status, SeedStatus::Diverged { .. }) && s.rel_l2.is_none()));
    assert_eq!(record.mean_rel_l2, None);
    assert!(dir.path().join("run.json").exists());
}

#[test]
fn presets_match_the_published_hyperparameters() {
    let ac = ExperimentConfig::preset("allen_cahn_paper").unwrap();
    assert_eq!((ac.network.arch, ac.network.num_blocks, ac.network.width), (Arch::Em, 4, 185));
    assert_eq!(ac.network.embedding, EmbeddingSpec::Periodic1dPlusTime { m: 10, period_x: 2.0 });
    let adam = ac.train.adam.as_ref().unwrap();
    assert_eq!((adam.steps, adam.initial_lr, adam.decay_steps, adam.decay_rate), (300_000, 1e-3, 8000.0, 0.9));
    assert_eq!(ac.collocation.residual, 25_600);
    assert_eq!(ac.problem.weights.ic, 100.0);

    let h = ExperimentConfig::preset("helmholtz_paper").unwrap();
    assert_eq!((h.network.num_blocks, h.network.width), (1, 64));
    assert!(matches!(h.network.embedding, EmbeddingSpec::GaussianFourier { scale, .. } if scale == 2.0));
    assert_eq!(h.network.output_transform, OutputTransform::AdfHelmholtz);
    let adam = h.train.adam.as_ref().unwrap();
    assert_eq!((adam.steps, adam.initial_lr), (500, 0.005));
    assert_eq!(h.train.lbfgs, Some(LbfgsConfig::new(500)));
    assert_eq!((h.collocation.residual, h.collocation.strategy), (10_201, SamplingStrategy::Grid));

    let adv = ExperimentConfig::preset("advection_paper").unwrap();
    assert_eq!((adv.network.num_blocks, adv.network.width), (22, 128));
    let adam = adv.train.adam.as_ref().unwrap();
    assert_eq!((adam.steps, adam.initial_lr, adam.decay_steps, adam.decay_rate), (100_000, 1e-3, 2000.0, 0.9));
    assert_eq!(adv.collocation.residual, 20_000);

    let acd = ExperimentConfig::preset("allen_cahn_desk").unwrap();
    assert_eq!((acd.network.num_blocks, acd.network.width, acd.collocation.residual), (2, 128, 8192));
    assert_eq!(acd.train.adam.unwrap().steps, 50_000);
    let advd = ExperimentConfig::preset("advection_desk").unwrap();
    assert_eq!((advd.network.num_blocks, advd.network.width), (4, 64));
    assert_eq!(advd.train.adam.unwrap().steps, 30_000);
}

#[test]
fn every_preset_validates_and_round_trips_through_toml() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESETS {
        let c = ExperimentConfig::preset(name).unwrap();
        c.validate().unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        fs::write(&path, c.to_toml().unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap(), c, "{name}");
    }
    assert!(ExperimentConfig::preset("nope").is_err());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut text = ExperimentConfig::preset("helmholtz_desk").unwrap().to_toml().unwrap();
    text.push_str("\nmystery = 3\n");
    fs::write(&path, text).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
    let mut c = ExperimentConfig::preset("helmholtz_desk").unwrap();
    assert!(c.apply_override("network.depth=3").is_err());
}

#[test]
fn helmholtz_reference_export_is_the_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.grid");
    let field = generate_reference(&PdeProblem::helmholtz(), &SpectralConfig::default(), &path).unwrap();
    assert_eq!(field.shape(), (101, 101));
    let back = GridField::read(&path, ["x", "y"], None).unwrap();
    for (i, &x) in back.axes()[0].iter().enumerate() {
        for (j, &y) in back.axes()[1].iter().enumerate() {
            assert!((back.values()[[i, j]] - exact_helmholtz(x, y)).abs() <= 1e-15);
        }
    }
}

#[test]
fn allen_cahn_reference_regenerates_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SpectralConfig { modes: 256, steps_per_slice: 20, time_slices: 21, x_nodes: 129 };
    let (a, b) = (dir.path().join("a.grid"), dir.path().join("b.grid"));
    solve_allen_cahn_reference(&ALLEN_CAHN, &cfg).unwrap().write(&a).unwrap();
    solve_allen_cahn_reference(&ALLEN_CAHN, &cfg).unwrap().write(&b).unwrap();
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn ablation_covers_every_pattern_once() {
    let base = ExperimentConfig::preset("helmholtz_desk").unwrap();
    let v = ablation_variants(&base, &[Toggle::FourierFeature, Toggle::Adf]).unwrap();
    let patterns: Vec<Vec<bool>> = v.iter().map(|v| v.pattern.iter().map(|p| p.1).collect()).collect();
    assert_eq!(patterns, vec![vec![true, true], vec![true, false], vec![false, true], vec![false, false]]);
    assert_eq!(v[3].config.network.embedding, EmbeddingSpec::None);
    assert_eq!(v[3].config.network.output_transform, OutputTransform::None);
    for variant in &v {
        variant.config.validate().unwrap();
    }
}
