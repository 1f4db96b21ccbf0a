//! Reference fields and the relative L2 error.

mod exact;
mod grid;
mod spectral;

use ndarray::Array2;

pub use exact::{exact_advection, exact_helmholtz, exact_jet, exact_value};
pub use grid::GridField;
pub use spectral::{solve_allen_cahn_reference, spectral_self_convergence, SpectralConfig};

use crate::error::{Error, Result};
use crate::pde::{Equation, PdeProblem, ProblemKind};

/// `||pred - reference|| / ||reference||` over flattened values.
pub fn relative_l2(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::config(format!(
            "fields differ in size: {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    let den: f64 = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
    if den == 0.0 || !den.is_finite() {
        return Err(Error::UndefinedMetric);
    }
    let num: f64 = pred
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r) * (p - r))
        .sum::<f64>()
        .sqrt();
    Ok(num / den)
}

/// Relative L2 of two fields on the same grid, skipping periodic duplicates.
pub fn relative_l2_field(pred: &GridField, reference: &GridField) -> Result<f64> {
    if pred.axes() != reference.axes() || pred.periodic_axis() != reference.periodic_axis() {
        return Err(Error::config("fields live on different grids"));
    }
    relative_l2(&pred.norm_values(), &reference.norm_values())
}

/// A prediction scored against its reference.
#[derive(Clone, Debug)]
pub struct SolutionGrid {
    pub u_ref: GridField,
    pub u_pred: GridField,
    pub rel_l2: f64,
    pub max_abs_err: f64,
}

impl SolutionGrid {
    pub fn new(u_ref: GridField, pred_values: Array2<f64>) -> Result<Self> {
        let u_pred = u_ref.with_values(pred_values)?;
        let rel_l2 = relative_l2_field(&u_pred, &u_ref)?;
        let max_abs_err = u_pred
            .difference(&u_ref)?
            .norm_values()
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        Ok(Self {
            u_ref,
            u_pred,
            rel_l2,
            max_abs_err,
        })
    }

    pub fn error(&self) -> GridField {
        self.u_pred.difference(&self.u_ref).expect("same grid by construction")
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Axis names, coordinates and periodic axis of the grid a problem is scored on.
pub fn evaluation_axes(problem: &PdeProblem) -> ([&'static str; 2], [Vec<f64>; 2], Option<usize>) {
    let d = &problem.domain;
    match problem.kind() {
        ProblemKind::AllenCahn => (["t", "x"], [linspace(d[0].0, d[0].1, 201), linspace(d[1].0, d[1].1, 513)], Some(1)),
        ProblemKind::Helmholtz => (["x", "y"], [linspace(d[0].0, d[0].1, 101), linspace(d[1].0, d[1].1, 101)], None),
        ProblemKind::Advection => (["t", "x"], [linspace(d[0].0, d[0].1, 201), linspace(d[1].0, d[1].1, 257)], Some(1)),
    }
}

/// Reference field on the evaluation grid: closed form where one exists,
/// otherwise the spectral solve at `spectral` resolution.
pub fn reference_field(problem: &PdeProblem, spectral: &SpectralConfig) -> Result<GridField> {
    let (names, axes, periodic) = evaluation_axes(problem);
    match problem.equation {
        Equation::AllenCahn { .. } => {
            if problem.domain != [(0.0, 1.0), (-1.0, 1.0)] {
                return Err(Error::config("spectral reference assumes t in [0, 1], x in [-1, 1]"));
            }
            let field = solve_allen_cahn_reference(&problem.equation, spectral)?;
            if field.axes() != &axes {
                return Err(Error::config(format!(
                    "spectral output grid {}x{} differs from the evaluation grid {}x{}",
                    field.axes()[0].len(),
                    field.axes()[1].len(),
                    axes[0].len(),
                    axes[1].len()
                )));
            }
            Ok(field)
        }
        ref eq => GridField::from_fn(names, axes, periodic, |a, b| {
            exact_value(eq, &[a, b]).expect("closed form exists")
        }),
    }
}

/// Loads an externally computed reference for `problem` from a grid file.
pub fn import_reference(problem: &PdeProblem, path: &std::path::Path) -> Result<GridField> {
    let (names, axes, periodic) = evaluation_axes(problem);
    let field = GridField::read(path, names, periodic)?;
    let close = field.axes().iter().zip(&axes).all(|(a, b)| {
        a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + q.abs()))
    });
    if !close {
        return Err(Error::config(format!(
            "{} does not cover the evaluation grid",
            path.display()
        )));
    }
    GridField::new(names, axes, field.values().clone(), periodic)
}
