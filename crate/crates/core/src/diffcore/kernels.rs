//! Element-wise jet kernels over component-major buffers.
//!
//! Every buffer holds `components` planes of `plane` entries each. The kernels
//! walk the planes in tiles so each inner loop is a straight zip over slices.

use super::jet::JetLayout;

const TILE: usize = 256;

#[inline]
fn part(buf: &[f64], plane: usize, comp: usize, lo: usize, hi: usize) -> &[f64] {
    &buf[comp * plane + lo..comp * plane + hi]
}

#[inline]
fn part_mut(buf: &mut [f64], plane: usize, comp: usize, lo: usize, hi: usize) -> &mut [f64] {
    &mut buf[comp * plane + lo..comp * plane + hi]
}

fn tiles(plane: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..plane).step_by(TILE).map(move |lo| (lo, (lo + TILE).min(plane)))
}

/// tanh applied to a jet: value, first and selected second derivatives.
pub(crate) fn tanh_forward(layout: &JetLayout, plane: usize, src: &[f64], dst: &mut [f64]) {
    let coords = layout.coords();
    let mut a = [0.0; TILE];
    let mut b = [0.0; TILE];
    for (lo, hi) in tiles(plane) {
        let n = hi - lo;
        let (a, b) = (&mut a[..n], &mut b[..n]);
        for (((d, &x), a), b) in part_mut(dst, plane, 0, lo, hi)
            .iter_mut()
            .zip(part(src, plane, 0, lo, hi))
            .zip(a.iter_mut())
            .zip(b.iter_mut())
        {
            let s = x.tanh();
            *d = s;
            *a = 1.0 - s * s;
            *b = -2.0 * s * *a;
        }
        for i in 0..coords {
            for ((d, &x), &a) in part_mut(dst, plane, 1 + i, lo, hi)
                .iter_mut()
                .zip(part(src, plane, 1 + i, lo, hi))
                .zip(a.iter())
            {
                *d = a * x;
            }
        }
        for (j, &c) in layout.second().iter().enumerate() {
            let d1 = part(src, plane, 1 + c, lo, hi);
            let d2 = part(src, plane, 1 + coords + j, lo, hi);
            for ((((d, &p), &q), &a), &b) in part_mut(dst, plane, 1 + coords + j, lo, hi)
                .iter_mut()
                .zip(d1)
                .zip(d2)
                .zip(a.iter())
                .zip(b.iter())
            {
                *d = b * p * p + a * q;
            }
        }
    }
}

/// Element-wise product of two jets with the order-two Leibniz rule.
pub(crate) fn hadamard_forward(layout: &JetLayout, plane: usize, a: &[f64], b: &[f64], dst: &mut [f64]) {
    let coords = layout.coords();
    for (lo, hi) in tiles(plane) {
        let av = part(a, plane, 0, lo, hi);
        let bv = part(b, plane, 0, lo, hi);
        for ((d, &x), &y) in part_mut(dst, plane, 0, lo, hi).iter_mut().zip(av).zip(bv) {
            *d = x * y;
        }
        for i in 0..coords {
            let a1 = part(a, plane, 1 + i, lo, hi);
            let b1 = part(b, plane, 1 + i, lo, hi);
            for ((((d, &p), &q), &x), &y) in part_mut(dst, plane, 1 + i, lo, hi)
                .iter_mut()
                .zip(a1)
                .zip(b1)
                .zip(av)
                .zip(bv)
            {
                *d = p * y + x * q;
            }
        }
        for (j, &c) in layout.second().iter().enumerate() {
            let comp = 1 + coords + j;
            let a1 = part(a, plane, 1 + c, lo, hi);
            let b1 = part(b, plane, 1 + c, lo, hi);
            let a2 = part(a, plane, comp, lo, hi);
            let b2 = part(b, plane, comp, lo, hi);
            let dst2 = part_mut(dst, plane, comp, lo, hi);
            for k in 0..hi - lo {
                dst2[k] = a2[k] * bv[k] + 2.0 * a1[k] * b1[k] + av[k] * b2[k];
            }
        }
    }
}

/// Adjoint of tanh with respect to its input jet `x`, given the output value `y`.
pub(crate) fn tanh_backward(layout: &JetLayout, plane: usize, x: &[f64], y: &[f64], g: &[f64], gx: &mut [f64]) {
    let coords = layout.coords();
    let mut a = [0.0; TILE];
    let mut b = [0.0; TILE];
    let mut c = [0.0; TILE];
    for (lo, hi) in tiles(plane) {
        let n = hi - lo;
        let (a, b, c) = (&mut a[..n], &mut b[..n], &mut c[..n]);
        let s = part(y, plane, 0, lo, hi);
        let g0 = part(g, plane, 0, lo, hi);
        for k in 0..n {
            a[k] = 1.0 - s[k] * s[k];
            b[k] = -2.0 * s[k] * a[k];
            c[k] = -2.0 * (a[k] * a[k] + s[k] * b[k]);
        }
        {
            let gv = part_mut(gx, plane, 0, lo, hi);
            for k in 0..n {
                gv[k] = g0[k] * a[k];
            }
        }
        for i in 0..coords {
            let gi = part(g, plane, 1 + i, lo, hi);
            let xi = part(x, plane, 1 + i, lo, hi);
            {
                let gv = part_mut(gx, plane, 0, lo, hi);
                for k in 0..n {
                    gv[k] += gi[k] * b[k] * xi[k];
                }
            }
            let gxi = part_mut(gx, plane, 1 + i, lo, hi);
            for k in 0..n {
                gxi[k] = gi[k] * a[k];
            }
        }
        for (j, &col) in layout.second().iter().enumerate() {
            let comp = 1 + coords + j;
            let g2 = part(g, plane, comp, lo, hi);
            let x1 = part(x, plane, 1 + col, lo, hi);
            let x2 = part(x, plane, comp, lo, hi);
            {
                let gv = part_mut(gx, plane, 0, lo, hi);
                for k in 0..n {
                    gv[k] += g2[k] * (c[k] * x1[k] * x1[k] + b[k] * x2[k]);
                }
            }
            {
                let gx1 = part_mut(gx, plane, 1 + col, lo, hi);
                for k in 0..n {
                    gx1[k] += g2[k] * 2.0 * b[k] * x1[k];
                }
            }
            let gx2 = part_mut(gx, plane, comp, lo, hi);
            for k in 0..n {
                gx2[k] = g2[k] * a[k];
            }
        }
    }
}

/// Adjoint of `a * other` with respect to `a`, writing into `ga`.
pub(crate) fn hadamard_backward(layout: &JetLayout, plane: usize, other: &[f64], g: &[f64], ga: &mut [f64]) {
    let coords = layout.coords();
    for (lo, hi) in tiles(plane) {
        let n = hi - lo;
        let ov = part(other, plane, 0, lo, hi);
        {
            let g0 = part(g, plane, 0, lo, hi);
            let gv = part_mut(ga, plane, 0, lo, hi);
            for k in 0..n {
                gv[k] = g0[k] * ov[k];
            }
        }
        for i in 0..coords {
            let gi = part(g, plane, 1 + i, lo, hi);
            let oi = part(other, plane, 1 + i, lo, hi);
            {
                let gv = part_mut(ga, plane, 0, lo, hi);
                for k in 0..n {
                    gv[k] += gi[k] * oi[k];
                }
            }
            let gai = part_mut(ga, plane, 1 + i, lo, hi);
            for k in 0..n {
                gai[k] = gi[k] * ov[k];
            }
        }
        for (j, &col) in layout.second().iter().enumerate() {
            let comp = 1 + coords + j;
            let g2 = part(g, plane, comp, lo, hi);
            let o1 = part(other, plane, 1 + col, lo, hi);
            let o2 = part(other, plane, comp, lo, hi);
            {
                let gv = part_mut(ga, plane, 0, lo, hi);
                for k in 0..n {
                    gv[k] += g2[k] * o2[k];
                }
            }
            {
                let ga1 = part_mut(ga, plane, 1 + col, lo, hi);
                for k in 0..n {
                    ga1[k] += 2.0 * g2[k] * o1[k];
                }
            }
            let ga2 = part_mut(ga, plane, comp, lo, hi);
            for k in 0..n {
                ga2[k] = g2[k] * ov[k];
            }
        }
    }
}
