//! Benchmark PDEs, their residuals over jets, collocation sampling and the
//! composite PINN loss.

mod collocation;
mod loss;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diffcore::{Jet, JetLayout};
use crate::error::{Error, Result};

pub use collocation::{sample_collocation, CollocationCounts, CollocationSet, SamplingStrategy};
pub use loss::{assemble_loss, assemble_loss_from_jets, LossTerms, PinnObjective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    AllenCahn,
    Helmholtz,
    Advection,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::AllenCahn => "allen_cahn",
            ProblemKind::Helmholtz => "helmholtz",
            ProblemKind::Advection => "advection",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "allen_cahn" => Ok(ProblemKind::AllenCahn),
            "helmholtz" => Ok(ProblemKind::Helmholtz),
            "advection" => Ok(ProblemKind::Advection),
            other => Err(Error::config(format!("unknown problem '{other}'"))),
        }
    }
}

/// PDE constants. Raw inputs are `(t, x)` for the evolution problems and
/// `(x, y)` for Helmholtz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "equation", rename_all = "snake_case")]
pub enum Equation {
    /// `u_t - diffusion * u_xx + reaction * u^3 - reaction * u = 0`
    AllenCahn { diffusion: f64, reaction: f64 },
    /// `u_xx + u_yy + k^2 u - q(x, y) = 0`
    Helmholtz { k: f64, a1: f64, a2: f64 },
    /// `u_t + beta * u_x = 0`
    Advection { beta: f64 },
}

pub const ALLEN_CAHN: Equation = Equation::AllenCahn {
    diffusion: 1e-4,
    reaction: 5.0,
};
pub const HELMHOLTZ: Equation = Equation::Helmholtz {
    k: 1.0,
    a1: 1.0,
    a2: 4.0,
};
pub const ADVECTION: Equation = Equation::Advection { beta: 100.0 };

fn need(jet: &Jet, d1: usize, d2: usize, what: &str) -> Result<()> {
    if jet.d1.len() < d1 || jet.d2.len() < d2 {
        return Err(Error::config(format!(
            "{what} residual needs {d1} first and {d2} second derivative slots, jet has {} and {}",
            jet.d1.len(),
            jet.d2.len()
        )));
    }
    Ok(())
}

impl Equation {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Equation::AllenCahn { .. } => ProblemKind::AllenCahn,
            Equation::Helmholtz { .. } => ProblemKind::Helmholtz,
            Equation::Advection { .. } => ProblemKind::Advection,
        }
    }

    /// Derivatives the residual consumes.
    pub fn layout(&self) -> JetLayout {
        let second = match self {
            Equation::AllenCahn { .. } => vec![1],
            Equation::Helmholtz { .. } => vec![0, 1],
            Equation::Advection { .. } => vec![],
        };
        JetLayout::new(2, second).expect("static layout")
    }

    /// Source term `q(x, y)` of the Helmholtz problem; zero otherwise.
    pub fn source(&self, coords: &[f64]) -> f64 {
        match *self {
            Equation::Helmholtz { k, a1, a2 } => {
                let (x, y) = (coords[0], coords[1]);
                let s = (a1 * PI * x).sin() * (a2 * PI * y).sin();
                -(a1 * PI).powi(2) * s - (a2 * PI).powi(2) * s + k * k * s
            }
            _ => 0.0,
        }
    }

    pub fn residual(&self, jet: &Jet, coords: &[f64]) -> Result<f64> {
        Ok(self.residual_with_partials(jet, coords)?.0)
    }

    /// Residual and its partial derivatives with respect to each jet slot.
    pub fn residual_with_partials(&self, jet: &Jet, coords: &[f64]) -> Result<(f64, Jet)> {
        let mut partial = Jet {
            value: 0.0,
            d1: vec![0.0; jet.d1.len()],
            d2: vec![0.0; jet.d2.len()],
        };
        let u = jet.value;
        let r = match *self {
            Equation::AllenCahn { diffusion, reaction } => {
                need(jet, 2, 1, "allen_cahn")?;
                partial.value = 3.0 * reaction * u * u - reaction;
                partial.d1[0] = 1.0;
                partial.d2[0] = -diffusion;
                jet.d1[0] - diffusion * jet.d2[0] + reaction * u * u * u - reaction * u
            }
            Equation::Helmholtz { k, .. } => {
                need(jet, 2, 2, "helmholtz")?;
                partial.value = k * k;
                partial.d2[0] = 1.0;
                partial.d2[1] = 1.0;
                jet.d2[0] + jet.d2[1] + k * k * u - self.source(coords)
            }
            Equation::Advection { beta } => {
                need(jet, 2, 0, "advection")?;
                partial.d1[0] = 1.0;
                partial.d1[1] = beta;
                jet.d1[0] + beta * jet.d1[1]
            }
        };
        Ok((r, partial))
    }
}

/// `u_t - 0.0001 u_xx + 5u^3 - 5u` for a jet tracking `(t, x)` with `u_xx`.
pub fn residual_allen_cahn(jet: &Jet) -> Result<f64> {
    ALLEN_CAHN.residual(jet, &[])
}

/// `u_xx + u_yy + u - q(x, y)` with `a1 = 1`, `a2 = 4`, `k = 1`.
pub fn residual_helmholtz(jet: &Jet, x: f64, y: f64) -> Result<f64> {
    HELMHOLTZ.residual(jet, &[x, y])
}

/// `u_t + 100 u_x`.
pub fn residual_advection(jet: &Jet) -> Result<f64> {
    ADVECTION.residual(jet, &[])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryHandling {
    /// Periodicity built into the input embedding.
    ExactViaEmbedding,
    /// Dirichlet data built into the output transform.
    ExactViaAdf,
    /// Penalised through the `l_bc` loss term.
    LossTerm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub ic: f64,
    pub bc: f64,
    pub r: f64,
}

/// A benchmark: equation, domain box, initial data and boundary handling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeProblem {
    pub equation: Equation,
    /// `(lo, hi)` per raw coordinate.
    pub domain: Vec<(f64, f64)>,
    pub bc: BoundaryHandling,
    pub weights: LossWeights,
}

impl PdeProblem {
    pub fn allen_cahn() -> Self {
        Self {
            equation: ALLEN_CAHN,
            domain: vec![(0.0, 1.0), (-1.0, 1.0)],
            bc: BoundaryHandling::ExactViaEmbedding,
            weights: LossWeights {
                ic: 100.0,
                bc: 1.0,
                r: 1.0,
            },
        }
    }

    pub fn helmholtz() -> Self {
        Self {
            equation: HELMHOLTZ,
            domain: vec![(-1.0, 1.0), (-1.0, 1.0)],
            bc: BoundaryHandling::ExactViaAdf,
            weights: LossWeights {
                ic: 0.0,
                bc: 100.0,
                r: 1.0,
            },
        }
    }

    pub fn advection() -> Self {
        Self {
            equation: ADVECTION,
            domain: vec![(0.0, 1.0), (0.0, 2.0 * PI)],
            bc: BoundaryHandling::ExactViaEmbedding,
            weights: LossWeights {
                ic: 100.0,
                bc: 1.0,
                r: 1.0,
            },
        }
    }

    pub fn for_kind(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::AllenCahn => Self::allen_cahn(),
            ProblemKind::Helmholtz => Self::helmholtz(),
            ProblemKind::Advection => Self::advection(),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.equation.kind()
    }

    pub fn has_initial_condition(&self) -> bool {
        self.kind() != ProblemKind::Helmholtz
    }

    /// Initial data `g(x)` for the evolution problems.
    pub fn initial_value(&self, x: f64) -> f64 {
        match self.kind() {
            ProblemKind::AllenCahn => x * x * (PI * x).cos(),
            ProblemKind::Advection => x.sin(),
            ProblemKind::Helmholtz => 0.0,
        }
    }

    /// Whether the periodic boundary loss also matches `u_x` across the period.
    pub fn periodic_derivative(&self) -> bool {
        self.kind() == ProblemKind::AllenCahn
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain.len() != 2 || self.domain.iter().any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::config("domain must be two non-empty intervals"));
        }
        let w = self.weights;
        if [w.ic, w.bc, w.r].iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("loss weights must be non-negative"));
        }
        match (self.kind(), self.bc) {
            (ProblemKind::Helmholtz, BoundaryHandling::ExactViaEmbedding) => Err(Error::config(
                "helmholtz boundary data cannot be imposed by a periodic embedding",
            )),
            (ProblemKind::AllenCahn | ProblemKind::Advection, BoundaryHandling::ExactViaAdf) => {
                Err(Error::config("periodic problems cannot use the ADF transform"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ac_layout() -> JetLayout {
        ALLEN_CAHN.layout()
    }

    #[test]
    fn paper_constants() {
        assert_eq!(ALLEN_CAHN, Equation::AllenCahn { diffusion: 0.0001, reaction: 5.0 });
        assert_eq!(HELMHOLTZ, Equation::Helmholtz { k: 1.0, a1: 1.0, a2: 4.0 });
        assert_eq!(ADVECTION, Equation::Advection { beta: 100.0 });
        assert_eq!(PdeProblem::allen_cahn().weights.ic, 100.0);
    }

    #[test]
    fn allen_cahn_fixed_points() {
        let layout = ac_layout();
        assert_eq!(residual_allen_cahn(&Jet::zero(&layout)).unwrap(), 0.0);
        assert_eq!(residual_allen_cahn(&Jet::constant(1.0, &layout)).unwrap(), 0.0);
    }

    #[test]
    fn allen_cahn_manufactured() {
        // u = sin(x) e^{-t} at (t, x) = (0.5, 1)
        let (t, x) = (0.5_f64, 1.0_f64);
        let u = x.sin() * (-t).exp();
        let jet = Jet { value: u, d1: vec![-u, x.cos() * (-t).exp()], d2: vec![-u] };
        let expected = -u - 0.0001 * (-u) + 5.0 * u.powi(3) - 5.0 * u;
        assert!((residual_allen_cahn(&jet).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn missing_slots_are_config_errors() {
        let layout = JetLayout::new(2, vec![]).unwrap();
        assert!(matches!(residual_allen_cahn(&Jet::zero(&layout)), Err(Error::Config(_))));
        assert!(residual_helmholtz(&Jet::zero(&layout), 0.0, 0.0).is_err());
        assert!(residual_advection(&Jet::zero(&JetLayout::value_only())).is_err());
    }

    #[test]
    fn helmholtz_exact_solution_and_source() {
        let layout = HELMHOLTZ.layout();
        assert_eq!(residual_helmholtz(&Jet::zero(&layout), 0.0, 0.0).unwrap(), 0.0);

        let (x, y) = (0.5_f64, 0.125_f64);
        // sin(pi/2) = 1, sin(pi/2) = 1: q = -pi^2 - 16 pi^2 + 1
        let q = -PI * PI - 16.0 * PI * PI + 1.0;
        let r = residual_helmholtz(&Jet::zero(&layout), x, y).unwrap();
        assert!((r + q).abs() < 1e-12, "{r} vs {}", -q);

        for &(x, y) in &[(0.3, -0.7), (-0.91, 0.44), (0.05, 0.999)] {
            let s = |a: f64, v: f64| (a * PI * v).sin();
            let u = s(1.0, x) * s(4.0, y);
            let jet = Jet {
                value: u,
                d1: vec![PI * (PI * x).cos() * s(4.0, y), 4.0 * PI * s(1.0, x) * (4.0 * PI * y).cos()],
                d2: vec![-PI * PI * u, -16.0 * PI * PI * u],
            };
            assert!(residual_helmholtz(&jet, x, y).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn advection_cases() {
        let layout = ADVECTION.layout();
        assert_eq!(residual_advection(&Jet::constant(3.0, &layout)).unwrap(), 0.0);
        assert_eq!(residual_advection(&Jet::variable(0.7, 1, &layout)).unwrap(), 100.0);
        let (t, x) = (0.37_f64, 2.1_f64);
        let c = (x - 100.0 * t).cos();
        let jet = Jet { value: (x - 100.0 * t).sin(), d1: vec![-100.0 * c, c], d2: vec![] };
        assert!(residual_advection(&jet).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn partials_match_finite_differences() {
        let eqs = [ALLEN_CAHN, HELMHOLTZ, ADVECTION];
        for eq in eqs {
            let layout = eq.layout();
            let jet = Jet {
                value: 0.7,
                d1: vec![0.3, -1.2],
                d2: vec![2.0, -0.4][..layout.second().len()].to_vec(),
            };
            let coords = [0.2, -0.3];
            let (_, partial) = eq.residual_with_partials(&jet, &coords).unwrap();
            let h = 1e-6;
            let fd = |f: &dyn Fn(&mut Jet, f64)| {
                let mut p = jet.clone();
                f(&mut p, h);
                let mut m = jet.clone();
                f(&mut m, -h);
                (eq.residual(&p, &coords).unwrap() - eq.residual(&m, &coords).unwrap()) / (2.0 * h)
            };
            assert!((fd(&|j, h| j.value += h) - partial.value).abs() < 1e-6);
            for i in 0..2 {
                assert!((fd(&|j, h| j.d1[i] += h) - partial.d1[i]).abs() < 1e-6);
            }
            for i in 0..layout.second().len() {
                assert!((fd(&|j, h| j.d2[i] += h) - partial.d2[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn advection_is_linear_in_the_jet() {
        let jet = Jet { value: 0.5, d1: vec![1.5, -0.25], d2: vec![] };
        let alpha = -3.25;
        let scaled = Jet { value: alpha * 0.5, d1: vec![alpha * 1.5, alpha * -0.25], d2: vec![] };
        let a = residual_advection(&scaled).unwrap();
        let b = alpha * residual_advection(&jet).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn problem_validation() {
        let mut p = PdeProblem::helmholtz();
        assert!(p.validate().is_ok());
        p.bc = BoundaryHandling::ExactViaEmbedding;
        assert!(p.validate().is_err());
        let mut p = PdeProblem::advection();
        p.bc = BoundaryHandling::ExactViaAdf;
        assert!(p.validate().is_err());
    }
}
