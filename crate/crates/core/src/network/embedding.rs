use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::diffcore::{Jet, JetBatch, JetLayout};
use crate::error::{Error, Result};

/// Input feature map applied before the first layer.
///
/// The periodic kinds expect raw inputs ordered `(t, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSpec {
    None,
    /// `[cos(Bx), sin(Bx)]` with `B` drawn from `N(0, scale^2)` at init.
    GaussianFourier { scale: f64, num_features: usize },
    /// `(t, 1, cos(w x), sin(w x), ..., cos(m w x), sin(m w x))`, `w = 2 pi / period_x`.
    Periodic1dPlusTime { m: usize, period_x: f64 },
    /// `(cos(wt t), sin(wt t), 1, cos(wx x), sin(wx x))`.
    PeriodicXAndT { period_x: f64, period_t: f64 },
}

impl EmbeddingSpec {
    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            EmbeddingSpec::None => input_dim,
            EmbeddingSpec::GaussianFourier { num_features, .. } => 2 * num_features,
            EmbeddingSpec::Periodic1dPlusTime { m, .. } => 2 + 2 * m,
            EmbeddingSpec::PeriodicXAndT { .. } => 5,
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        match *self {
            EmbeddingSpec::None => Ok(()),
            EmbeddingSpec::GaussianFourier { scale, num_features } => {
                if !(scale > 0.0) || num_features == 0 {
                    return Err(Error::config(
                        "gaussian_fourier needs scale > 0 and num_features >= 1",
                    ));
                }
                Ok(())
            }
            EmbeddingSpec::Periodic1dPlusTime { period_x, .. } => {
                if input_dim != 2 || !(period_x > 0.0) {
                    return Err(Error::config(
                        "periodic_1d_plus_time needs (t, x) input and period_x > 0",
                    ));
                }
                Ok(())
            }
            EmbeddingSpec::PeriodicXAndT { period_x, period_t } => {
                if input_dim != 2 || !(period_x > 0.0) || !(period_t > 0.0) {
                    return Err(Error::config(
                        "periodic_x_and_t needs (t, x) input and positive periods",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// One embedded coordinate as a function of the raw input.
enum Feature {
    Pass(usize),
    Const,
    Cos(Vec<f64>),
    Sin(Vec<f64>),
}

fn axis_freq(input_dim: usize, axis: usize, omega: f64) -> Vec<f64> {
    let mut w = vec![0.0; input_dim];
    w[axis] = omega;
    w
}

fn features(spec: &EmbeddingSpec, input_dim: usize, fourier: Option<&Array2<f64>>) -> Result<Vec<Feature>> {
    Ok(match *spec {
        EmbeddingSpec::None => (0..input_dim).map(Feature::Pass).collect(),
        EmbeddingSpec::GaussianFourier { num_features, .. } => {
            let b = fourier.ok_or_else(|| Error::config("gaussian_fourier embedding without a B matrix"))?;
            if b.dim() != (num_features, input_dim) {
                return Err(Error::config(format!(
                    "fourier matrix is {:?}, expected ({num_features}, {input_dim})",
                    b.dim()
                )));
            }
            let rows: Vec<Vec<f64>> = b.rows().into_iter().map(|r| r.to_vec()).collect();
            let mut out: Vec<Feature> = rows.iter().cloned().map(Feature::Cos).collect();
            out.extend(rows.into_iter().map(Feature::Sin));
            out
        }
        EmbeddingSpec::Periodic1dPlusTime { m, period_x } => {
            let omega = 2.0 * PI / period_x;
            let mut out = vec![Feature::Pass(0), Feature::Const];
            for k in 1..=m {
                let w = axis_freq(input_dim, 1, k as f64 * omega);
                out.push(Feature::Cos(w.clone()));
                out.push(Feature::Sin(w));
            }
            out
        }
        EmbeddingSpec::PeriodicXAndT { period_x, period_t } => {
            let wt = axis_freq(input_dim, 0, 2.0 * PI / period_t);
            let wx = axis_freq(input_dim, 1, 2.0 * PI / period_x);
            vec![
                Feature::Cos(wt.clone()),
                Feature::Sin(wt),
                Feature::Const,
                Feature::Cos(wx.clone()),
                Feature::Sin(wx),
            ]
        }
    })
}

/// Periodic axes folded into `[0, period)`, so the two ends of a period
/// give bit-identical features.
fn wrap_periodic(points: ArrayView2<'_, f64>, spec: &EmbeddingSpec) -> Array2<f64> {
    let mut out = points.to_owned();
    let periods: Vec<(usize, f64)> = match *spec {
        EmbeddingSpec::Periodic1dPlusTime { period_x, .. } => vec![(1, period_x)],
        EmbeddingSpec::PeriodicXAndT { period_x, period_t } => vec![(0, period_t), (1, period_x)],
        _ => vec![],
    };
    for (axis, period) in periods {
        out.column_mut(axis).mapv_inplace(|v| v.rem_euclid(period));
    }
    out
}

/// Embeds raw points (`n x input_dim`) into seed jets.
///
/// Derivatives are exact with respect to the raw coordinates. `layout` must
/// track either every raw coordinate or none of them.
pub fn embed(
    points: ArrayView2<'_, f64>,
    spec: &EmbeddingSpec,
    fourier: Option<&Array2<f64>>,
    layout: &JetLayout,
) -> Result<JetBatch> {
    let input_dim = points.ncols();
    spec.validate(input_dim)?;
    if layout.coords() != 0 && layout.coords() != input_dim {
        return Err(Error::config(format!(
            "jet layout tracks {} coordinates, input has {input_dim}",
            layout.coords()
        )));
    }
    let feats = features(spec, input_dim, fourier)?;
    let wrapped = wrap_periodic(points, spec);
    let n = points.nrows();
    let width = feats.len();
    let mut batch = JetBatch::zeros(layout.clone(), n, width);
    let coords = layout.coords();
    let second = layout.second().to_vec();
    for (k, feat) in feats.iter().enumerate() {
        for p in 0..n {
            let x = points.row(p);
            let (value, d1, d2): (f64, Vec<f64>, Vec<f64>) = match feat {
                Feature::Pass(i) => {
                    let mut d1 = vec![0.0; coords];
                    if coords > 0 {
                        d1[*i] = 1.0;
                    }
                    (x[*i], d1, vec![0.0; second.len()])
                }
                Feature::Const => (1.0, vec![0.0; coords], vec![0.0; second.len()]),
                Feature::Cos(w) | Feature::Sin(w) => {
                    let phase: f64 = w.iter().zip(wrapped.row(p).iter()).map(|(a, b)| a * b).sum();
                    let (s, c) = phase.sin_cos();
                    let (v, dv) = if matches!(feat, Feature::Cos(_)) { (c, -s) } else { (s, c) };
                    let d1 = (0..coords).map(|i| dv * w[i]).collect();
                    let d2 = second.iter().map(|&i| -v * w[i] * w[i]).collect();
                    (v, d1, d2)
                }
            };
            batch.set_jet(p, k, &Jet { value, d1, d2 })?;
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn layout2(second: Vec<usize>) -> JetLayout {
        JetLayout::new(2, second).unwrap()
    }

    #[test]
    fn output_dims() {
        assert_eq!(EmbeddingSpec::None.output_dim(2), 2);
        assert_eq!(EmbeddingSpec::GaussianFourier { scale: 2.0, num_features: 32 }.output_dim(2), 64);
        assert_eq!(EmbeddingSpec::Periodic1dPlusTime { m: 10, period_x: 2.0 }.output_dim(2), 22);
        assert_eq!(EmbeddingSpec::PeriodicXAndT { period_x: 1.0, period_t: 1.0 }.output_dim(2), 5);
    }

    #[test]
    fn periodic_1d_endpoints_coincide() {
        let spec = EmbeddingSpec::Periodic1dPlusTime { m: 10, period_x: 2.0 };
        let pts = array![[0.37, -1.0], [0.37, 1.0]];
        let e = embed(pts.view(), &spec, None, &layout2(vec![1])).unwrap();
        for k in 0..e.width() {
            let (a, b) = (e.jet(0, k), e.jet(1, k));
            assert!((a.value - b.value).abs() < 1e-13, "feature {k}");
            for (x, y) in a.d1.iter().zip(&b.d1) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in a.d2.iter().zip(&b.d2) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_fourier_matrix_gives_ones_then_zeros() {
        let spec = EmbeddingSpec::GaussianFourier { scale: 1.0, num_features: 3 };
        let b = Array2::zeros((3, 2));
        let pts = array![[0.3, -0.8]];
        let e = embed(pts.view(), &spec, Some(&b), &layout2(vec![0, 1])).unwrap();
        let values: Vec<f64> = (0..6).map(|k| e.jet(0, k).value).collect();
        assert_eq!(values, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        for k in 0..6 {
            let j = e.jet(0, k);
            assert!(j.d1.iter().chain(&j.d2).all(|&d| d == 0.0));
        }
    }

    #[test]
    fn periodic_x_and_t_matches_direct_formula_and_fd() {
        let spec = EmbeddingSpec::PeriodicXAndT { period_x: 2.0 * PI, period_t: 2.0 * PI };
        let (t, x) = (0.3_f64, 1.2_f64);
        let direct = [t.cos(), t.sin(), 1.0, x.cos(), x.sin()];
        let layout = layout2(vec![0, 1]);
        let at = |t: f64, x: f64| embed(array![[t, x]].view(), &spec, None, &layout).unwrap();
        let e = at(t, x);
        let h1 = 1e-5;
        let h2 = 1e-3;
        for (k, &want) in direct.iter().enumerate() {
            let j = e.jet(0, k);
            assert!((j.value - want).abs() < 1e-15);
            for coord in 0..2 {
                let shift = |h: f64| if coord == 0 { (t + h, x) } else { (t, x + h) };
                let (tp, xp) = shift(h1);
                let (tm, xm) = shift(-h1);
                let fd1 = (at(tp, xp).jet(0, k).value - at(tm, xm).jet(0, k).value) / (2.0 * h1);
                assert!((j.d1[coord] - fd1).abs() <= 1e-7 * (1.0 + j.d1[coord].abs()));
                let (tp, xp) = shift(h2);
                let (tm, xm) = shift(-h2);
                let fd2 = (at(tp, xp).jet(0, k).value - 2.0 * j.value + at(tm, xm).jet(0, k).value) / (h2 * h2);
                assert!((j.d2[coord] - fd2).abs() <= 1e-5 * (1.0 + j.d2[coord].abs()));
            }
        }
    }

    #[test]
    fn periodic_with_m_zero_is_time_and_constant() {
        let spec = EmbeddingSpec::Periodic1dPlusTime { m: 0, period_x: 2.0 };
        let e = embed(array![[0.4, 0.1]].view(), &spec, None, &layout2(vec![1])).unwrap();
        assert_eq!(e.width(), 2);
        assert_eq!(e.jet(0, 0).value, 0.4);
        assert_eq!(e.jet(0, 0).d1, vec![1.0, 0.0]);
        assert_eq!(e.jet(0, 1).value, 1.0);
    }

    #[test]
    fn value_only_layout_skips_derivatives() {
        let spec = EmbeddingSpec::PeriodicXAndT { period_x: 1.0, period_t: 3.0 };
        let e = embed(array![[0.1, 0.2], [0.3, 0.4]].view(), &spec, None, &JetLayout::value_only()).unwrap();
        assert_eq!(e.data().nrows(), 2);
    }

    #[test]
    fn mismatched_layout_rejected() {
        let spec = EmbeddingSpec::None;
        let layout = JetLayout::new(3, vec![]).unwrap();
        assert!(embed(array![[0.1, 0.2]].view(), &spec, None, &layout).is_err());
    }
}
