use std::f64::consts::PI;

use crate::diffcore::Jet;
use crate::pde::{Equation, ADVECTION, HELMHOLTZ};

/// `sin(pi x) sin(4 pi y)`.
pub fn exact_helmholtz(x: f64, y: f64) -> f64 {
    exact_value(&HELMHOLTZ, &[x, y]).expect("closed form")
}

/// `sin(x - 100 t)`.
pub fn exact_advection(t: f64, x: f64) -> f64 {
    exact_value(&ADVECTION, &[t, x]).expect("closed form")
}

/// Closed-form solution of `equation` at `coords`, if one exists.
pub fn exact_value(equation: &Equation, coords: &[f64]) -> Option<f64> {
    exact_jet(equation, coords).map(|j| j.value)
}

/// Closed-form solution with first and pure second derivatives in both
/// coordinates. Allen-Cahn has none.
pub fn exact_jet(equation: &Equation, coords: &[f64]) -> Option<Jet> {
    match *equation {
        Equation::Helmholtz { a1, a2, .. } => {
            let (x, y) = (coords[0], coords[1]);
            let (wx, wy) = (a1 * PI, a2 * PI);
            let (sx, cx) = (wx * x).sin_cos();
            let (sy, cy) = (wy * y).sin_cos();
            Some(Jet {
                value: sx * sy,
                d1: vec![wx * cx * sy, wy * sx * cy],
                d2: vec![-wx * wx * sx * sy, -wy * wy * sx * sy],
            })
        }
        Equation::Advection { beta } => {
            let (t, x) = (coords[0], coords[1]);
            let (s, c) = (x - beta * t).sin_cos();
            Some(Jet {
                value: s,
                d1: vec![-beta * c, c],
                d2: vec![-beta * beta * s, -s],
            })
        }
        Equation::AllenCahn { .. } => None,
    }
}
