use std::f64::consts::PI;

use empinn_core::diffcore::Jet;
use empinn_core::pde::{PdeProblem, ADVECTION, ALLEN_CAHN, HELMHOLTZ};
use empinn_core::reference::*;
use empinn_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Values from an independent numpy ETDRK4 implementation at 1024 modes and
/// dt = 1/16000, as (time slice, output node, value).
const NUMPY_VALUES: [(usize, usize, f64); 10] = [
    (200, 0, -0.9999988854104116),
    (200, 64, -0.9998772445781178),
    (200, 128, -0.06407679772316685),
    (200, 150, 0.9889954143018265),
    (200, 256, 0.0295797209729185),
    (200, 350, 0.992389234911408),
    (50, 0, -0.9990443691418736),
    (50, 128, -0.0005479479930557394),
    (50, 256, 0.0001743879862163289),
    (50, 400, -0.21147900178275747),
];

fn numpy_config() -> SpectralConfig {
    SpectralConfig { modes: 1024, ..SpectralConfig::default() }
}

#[test]
fn spectral_reference_matches_independent_solver() {
    let field = solve_allen_cahn_reference(&ALLEN_CAHN, &numpy_config()).unwrap();
    assert_eq!(field.shape(), (201, 513));
    for (slice, node, expected) in NUMPY_VALUES {
        let got = field.values()[[slice, node]];
        assert!((got - expected).abs() <= 1e-9, "slice {slice} node {node}: {got} vs {expected}");
    }
}

#[test]
fn spectral_reference_initial_condition_and_periodicity() {
    let field = solve_allen_cahn_reference(&ALLEN_CAHN, &numpy_config()).unwrap();
    for (j, &x) in field.axes()[1].iter().enumerate() {
        assert!((field.values()[[0, j]] - x * x * (PI * x).cos()).abs() <= 1e-12);
    }
    for row in field.values().rows() {
        assert_eq!(row[0], row[512]);
    }
    assert_eq!(field.axes()[0][200], 1.0);
}

#[test]
fn exact_solutions_annihilate_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let jet = exact_jet(&HELMHOLTZ, &[x, y]).unwrap();
        assert!(HELMHOLTZ.residual(&jet, &[x, y]).unwrap().abs() <= 1e-9);

        let (t, x) = (rng.random_range(0.0..1.0), rng.random_range(0.0..2.0 * PI));
        let jet = exact_jet(&ADVECTION, &[t, x]).unwrap();
        let jet = Jet { d2: vec![], ..jet };
        assert!(ADVECTION.residual(&jet, &[t, x]).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn exact_jets_match_finite_differences() {
    let h = 1e-5;
    for (eq, p) in [(HELMHOLTZ, [0.3, -0.7]), (ADVECTION, [0.4, 2.5])] {
        let jet = exact_jet(&eq, &p).unwrap();
        for c in 0..2 {
            let mut a = p;
            let mut b = p;
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (exact_value(&eq, &a).unwrap(), exact_value(&eq, &b).unwrap());
            let f0 = jet.value;
            let d1 = (fa - fb) / (2.0 * h);
            assert!((d1 - jet.d1[c]).abs() <= 1e-6 * (1.0 + jet.d1[c].abs()));
            let hh = 1e-3;
            let mut a = p;
            let mut b = p;
            a[c] += hh;
            b[c] -= hh;
            let d2 = (exact_value(&eq, &a).unwrap() - 2.0 * f0 + exact_value(&eq, &b).unwrap()) / (hh * hh);
            assert!((d2 - jet.d2[c]).abs() <= 1e-3 * (1.0 + jet.d2[c].abs()));
        }
    }
}

#[test]
fn imported_reference_round_trips() {
    let problem = PdeProblem::helmholtz();
    let field = reference_field(&problem, &SpectralConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.grid");
    field.write(&path).unwrap();
    let back = import_reference(&problem, &path).unwrap();
    assert_eq!(back, field);
    assert!(import_reference(&PdeProblem::advection(), &path).is_err());
}

#[test]
fn zero_reference_is_undefined() {
    let problem = PdeProblem::helmholtz();
    let field = reference_field(&problem, &SpectralConfig::default()).unwrap();
    let zero = field.with_values(field.values().mapv(|_| 0.0)).unwrap();
    assert!(matches!(relative_l2_field(&field, &zero), Err(Error::UndefinedMetric)));
    assert_eq!(relative_l2_field(&zero, &field).unwrap(), 1.0);
}

proptest! {
    #[test]
    fn relative_l2_invariances(
        pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..40),
        scale in 0.01f64..100.0,
        rot in 0usize..40,
    ) {
        let (p, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(r.iter().any(|v| v.abs() > 1e-3));
        let base = relative_l2(&p, &r).unwrap();
        let ps: Vec<f64> = p.iter().map(|v| v * scale).collect();
        let rs: Vec<f64> = r.iter().map(|v| v * scale).collect();
        prop_assert!((relative_l2(&ps, &rs).unwrap() - base).abs() <= 1e-12 * (1.0 + base));
        let k = rot % p.len();
        let mut pp = p.clone();
        let mut rr = r.clone();
        pp.rotate_left(k);
        rr.rotate_left(k);
        prop_assert!((relative_l2(&pp, &rr).unwrap() - base).abs() <= 1e-12 * (1.0 + base));
    }
}
