use ndarray::ArrayView2;

use super::OutputTransform;
use crate::diffcore::{Jet, JetBatch, JetLayout};
use crate::error::{Error, Result};

/// Jets of `phi(x, y) = (1 - x^2)(1 - y^2)` at each point (width 1).
pub fn adf_helmholtz_factor(points: ArrayView2<'_, f64>, layout: &JetLayout) -> Result<JetBatch> {
    if points.ncols() != 2 {
        return Err(Error::config("adf_helmholtz needs 2-D points"));
    }
    if layout.coords() != 0 && layout.coords() != 2 {
        return Err(Error::config("adf_helmholtz jets must track (x, y) or nothing"));
    }
    let mut out = JetBatch::zeros(layout.clone(), points.nrows(), 1);
    for (p, row) in points.rows().into_iter().enumerate() {
        let (x, y) = (row[0], row[1]);
        let (fx, fy) = (1.0 - x * x, 1.0 - y * y);
        let mut jet = Jet::constant(fx * fy, layout);
        if layout.coords() == 2 {
            jet.d1 = vec![-2.0 * x * fy, -2.0 * y * fx];
            jet.d2 = layout
                .second()
                .iter()
                .map(|&c| if c == 0 { -2.0 * fy } else { -2.0 * fx })
                .collect();
        }
        out.set_jet(p, 0, &jet)?;
    }
    Ok(out)
}

/// `u_bc = phi * u + g`, with the jet updated by the product rule.
///
/// `g` defaults to zero (the homogeneous Dirichlet case).
pub fn apply_output_transform(
    u: &JetBatch,
    points: ArrayView2<'_, f64>,
    transform: OutputTransform,
    g: Option<&JetBatch>,
) -> Result<JetBatch> {
    let scaled = match transform {
        OutputTransform::None => u.clone(),
        OutputTransform::AdfHelmholtz => {
            let phi = adf_helmholtz_factor(points, u.layout())?;
            if u.width() != 1 {
                return Err(Error::config("adf_helmholtz applies to scalar outputs"));
            }
            u.hadamard(&phi)?
        }
    };
    match g {
        Some(g) => scaled.add(g),
        None => Ok(scaled),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn vanishes_on_x_boundary() {
        let layout = JetLayout::new(2, vec![0, 1]).unwrap();
        let pts = array![[1.0, 0.3], [-1.0, -0.7]];
        let jets = vec![
            vec![Jet { value: 3.7, d1: vec![1.0, 2.0], d2: vec![0.5, -0.5] }],
            vec![Jet { value: -12.0, d1: vec![0.0, 2.0], d2: vec![1.5, 0.5] }],
        ];
        let u = JetBatch::from_jets(layout, &jets).unwrap();
        let out = apply_output_transform(&u, pts.view(), OutputTransform::AdfHelmholtz, None).unwrap();
        assert_eq!(out.jet(0, 0).value, 0.0);
        assert_eq!(out.jet(1, 0).value, 0.0);
    }

    #[test]
    fn constant_one_gives_phi() {
        let layout = JetLayout::new(2, vec![0, 1]).unwrap();
        let (x, y) = (0.25, -0.6);
        let u = JetBatch::from_jets(layout.clone(), &[vec![Jet::constant(1.0, &layout)]]).unwrap();
        let out = apply_output_transform(&u, array![[x, y]].view(), OutputTransform::AdfHelmholtz, None)
            .unwrap()
            .jet(0, 0);
        assert_eq!(out.value, (1.0 - x * x) * (1.0 - y * y));
        assert_eq!(out.d2[0], -2.0 * (1.0 - y * y));
        assert_eq!(out.d2[1], -2.0 * (1.0 - x * x));
    }

    #[test]
    fn none_with_offset_adds_g() {
        let layout = JetLayout::value_only();
        let u = JetBatch::from_jets(layout.clone(), &[vec![Jet::constant(1.0, &layout)]]).unwrap();
        let g = JetBatch::from_jets(layout.clone(), &[vec![Jet::constant(0.5, &layout)]]).unwrap();
        let out = apply_output_transform(&u, array![[0.0, 0.0]].view(), OutputTransform::None, Some(&g)).unwrap();
        assert_eq!(out.jet(0, 0).value, 1.5);
    }
}
