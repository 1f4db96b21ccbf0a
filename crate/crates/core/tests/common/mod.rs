#![allow(dead_code)]

use empinn_core::diffcore::{Activation, JetBatch, JetLayout};
use empinn_core::network::{
    init_params, predict, Arch, EmbeddingSpec, NetworkConfig, NetworkParams, OutputTransform,
};
use empinn_core::pde::{
    sample_collocation, BoundaryHandling, CollocationCounts, PdeProblem, PinnObjective, ProblemKind,
    SamplingStrategy,
};
use empinn_core::Result;
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One architecture/embedding/transform combination on its natural problem.
#[derive(Clone, Debug)]
pub struct Combo {
    pub label: String,
    pub problem: PdeProblem,
    pub config: NetworkConfig,
}

pub fn small_config(arch: Arch, embedding: EmbeddingSpec, transform: OutputTransform) -> NetworkConfig {
    NetworkConfig {
        arch,
        num_blocks: 1,
        width: 8,
        activation: Activation::Tanh,
        embedding,
        output_transform: transform,
        out_dim: 1,
        input_dim: 2,
    }
}

/// Every architecture x embedding x transform combination in scope.
pub fn all_combos() -> Vec<Combo> {
    let mut out = Vec::new();
    for arch in [Arch::Em, Arch::Mlp] {
        let an = format!("{arch:?}").to_lowercase();
        let ac = PdeProblem::allen_cahn();
        let mut ac_loss_bc = ac.clone();
        ac_loss_bc.bc = BoundaryHandling::LossTerm;
        let adv = PdeProblem::advection();
        let mut adv_loss_bc = adv.clone();
        adv_loss_bc.bc = BoundaryHandling::LossTerm;
        let helm = PdeProblem::helmholtz();
        let mut helm_loss_bc = helm.clone();
        helm_loss_bc.bc = BoundaryHandling::LossTerm;
        let ff = EmbeddingSpec::GaussianFourier { scale: 2.0, num_features: 4 };
        let cases = vec![
            ("allen_cahn/periodic_1d", ac.clone(), EmbeddingSpec::Periodic1dPlusTime { m: 3, period_x: 2.0 }, OutputTransform::None),
            ("allen_cahn/none+bc_loss", ac_loss_bc, EmbeddingSpec::None, OutputTransform::None),
            ("advection/periodic_x_t", adv.clone(), EmbeddingSpec::PeriodicXAndT { period_x: 2.0 * std::f64::consts::PI, period_t: 2.0 * std::f64::consts::PI }, OutputTransform::None),
            ("advection/none+bc_loss", adv_loss_bc, EmbeddingSpec::None, OutputTransform::None),
            ("helmholtz/fourier+adf", helm.clone(), ff.clone(), OutputTransform::AdfHelmholtz),
            ("helmholtz/fourier+bc_loss", helm_loss_bc.clone(), ff, OutputTransform::None),
            ("helmholtz/none+adf", helm, EmbeddingSpec::None, OutputTransform::AdfHelmholtz),
            ("helmholtz/none+bc_loss", helm_loss_bc, EmbeddingSpec::None, OutputTransform::None),
        ];
        for (name, problem, emb, tr) in cases {
            out.push(Combo {
                label: format!("{an}/{name}"),
                problem,
                config: small_config(arch, emb, tr),
            });
        }
    }
    out
}

pub fn random_points(problem: &PdeProblem, n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Array2::zeros((n, 2));
    for i in 0..n {
        for (axis, (lo, hi)) in problem.domain.iter().enumerate() {
            // interior: keep a margin so FD stencils stay inside the box
            let u: f64 = rng.random();
            pts[[i, axis]] = lo + (hi - lo) * (0.05 + 0.9 * u);
        }
    }
    pts
}

/// Scalar network output after the output transform at one raw point.
pub fn scalar_at(params: &NetworkParams, config: &NetworkConfig, t: f64, x: f64) -> f64 {
    let out = predict(params, config, array![[t, x]].view(), &JetLayout::value_only()).unwrap();
    out.component(0)[[0, 0]]
}

pub fn full_layout() -> JetLayout {
    JetLayout::new(2, vec![0, 1]).unwrap()
}

pub fn jets_at(params: &NetworkParams, config: &NetworkConfig, pts: &Array2<f64>) -> Result<JetBatch> {
    predict(params, config, pts.view(), &full_layout())
}

pub fn objective_for(combo: &Combo, seed: u64, n_residual: usize) -> (NetworkParams, PinnObjective) {
    let params = init_params(&combo.config, seed).unwrap();
    let counts = CollocationCounts { residual: n_residual, ic: 6, bc: 6 };
    let colloc = sample_collocation(&combo.problem, counts, seed + 100, SamplingStrategy::UniformRandom).unwrap();
    let obj = PinnObjective::new(&combo.problem, &combo.config, &params, &colloc).unwrap();
    (params, obj)
}

pub fn kind_name(kind: ProblemKind) -> &'static str {
    kind.name()
}
