//! Boundary conditions built into the network hold exactly.

mod common;

use std::f64::consts::PI;

use common::{full_layout, small_config};
use empinn_core::network::{init_params, predict, Arch, EmbeddingSpec, NetworkConfig, NetworkParams, OutputTransform};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT_TOL: f64 = 1e-12;

/// Init, then scramble every parameter so the check does not lean on init structure.
fn random_params(config: &NetworkConfig, seed: u64) -> NetworkParams {
    let mut params = init_params(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    for v in params.values_mut() {
        *v += rng.random_range(-0.5..0.5);
    }
    params
}

fn pairs(n: usize, seed: u64, t: (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(t.0..t.1)).collect()
}

/// `u(t, lo)` and `u(t, hi)` with their first and second x-derivatives.
fn max_periodic_gap(config: &NetworkConfig, params: &NetworkParams, lo: f64, hi: f64, ts: &[f64]) -> f64 {
    let mut pts = Array2::zeros((2 * ts.len(), 2));
    for (i, &t) in ts.iter().enumerate() {
        pts[[2 * i, 0]] = t;
        pts[[2 * i, 1]] = lo;
        pts[[2 * i + 1, 0]] = t;
        pts[[2 * i + 1, 1]] = hi;
    }
    let jets = predict(params, config, pts.view(), &full_layout()).unwrap();
    let mut gap: f64 = 0.0;
    for i in 0..ts.len() {
        let (a, b) = (jets.jet(2 * i, 0), jets.jet(2 * i + 1, 0));
        gap = gap
            .max((a.value - b.value).abs())
            .max((a.d1[1] - b.d1[1]).abs())
            .max((a.d2[1] - b.d2[1]).abs());
    }
    gap
}

#[test]
fn allen_cahn_embedding_is_periodic_in_x() {
    for arch in [Arch::Em, Arch::Mlp] {
        let config = small_config(arch, EmbeddingSpec::Periodic1dPlusTime { m: 10, period_x: 2.0 }, OutputTransform::None);
        for seed in 0..5 {
            let params = random_params(&config, seed);
            let gap = max_periodic_gap(&config, &params, -1.0, 1.0, &pairs(200, seed, (0.0, 1.0)));
            assert!(gap <= EXACT_TOL, "{arch:?} seed {seed}: gap {gap:e}");
        }
    }
}

#[test]
fn advection_embedding_is_periodic_in_x() {
    let spec = EmbeddingSpec::PeriodicXAndT { period_x: 2.0 * PI, period_t: 2.0 * PI };
    for seed in 0..5 {
        let config = small_config(Arch::Em, spec.clone(), OutputTransform::None);
        let params = random_params(&config, seed);
        let gap = max_periodic_gap(&config, &params, 0.0, 2.0 * PI, &pairs(200, seed, (0.0, 1.0)));
        assert!(gap <= EXACT_TOL, "seed {seed}: gap {gap:e}");
    }
}

fn boundary_points(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, 2));
    for i in 0..n {
        let s: f64 = rng.random_range(-1.0..1.0);
        let (x, y) = match i % 4 {
            0 => (-1.0, s),
            1 => (1.0, s),
            2 => (s, -1.0),
            _ => (s, 1.0),
        };
        pts[[i, 0]] = x;
        pts[[i, 1]] = y;
    }
    pts
}

#[test]
fn adf_output_vanishes_on_the_boundary() {
    let pts = boundary_points(1000, 11);
    for emb in [EmbeddingSpec::None, EmbeddingSpec::GaussianFourier { scale: 2.0, num_features: 32 }] {
        for arch in [Arch::Em, Arch::Mlp] {
            let config = small_config(arch, emb.clone(), OutputTransform::AdfHelmholtz);
            let params = random_params(&config, 3);
            let out = predict(&params, &config, pts.view(), &full_layout()).unwrap();
            let worst = out.component(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst <= EXACT_TOL, "{arch:?}/{emb:?}: |u| = {worst:e} on boundary");
        }
    }
}

#[test]
fn without_adf_the_boundary_is_not_pinned() {
    let pts = boundary_points(100, 12);
    let config = small_config(Arch::Em, EmbeddingSpec::None, OutputTransform::None);
    let out = predict(&random_params(&config, 4), &config, pts.view(), &full_layout()).unwrap();
    assert!(out.component(0).iter().any(|v| v.abs() > 1e-3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn periodicity_holds_for_any_seed_and_width(seed in 0u64..10_000, m in 1usize..12, width in 2usize..12, blocks in 1usize..4) {
        let mut config = small_config(Arch::Em, EmbeddingSpec::Periodic1dPlusTime { m, period_x: 2.0 }, OutputTransform::None);
        config.width = width;
        config.num_blocks = blocks;
        let params = random_params(&config, seed);
        let gap = max_periodic_gap(&config, &params, -1.0, 1.0, &pairs(8, seed, (0.0, 1.0)));
        prop_assert!(gap <= EXACT_TOL, "gap {gap:e}");
    }
}
