use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::grid::GridField;
use crate::error::{Error, Result};
use crate::pde::Equation;

/// Resolution of the pseudo-spectral Allen-Cahn solve.
///
/// The solver grid has `modes` equispaced nodes on `[-1, 1)`. Output is
/// sampled at `time_slices` equispaced times on `[0, 1]` and at `x_nodes`
/// equispaced points on `[-1, 1]`, the last one duplicating the first.
///
/// The initial data has a slope jump across the periodic boundary, so the
/// spatial error only falls like `modes^-2` until diffusion smooths the kink.
/// The default resolution is what the whole output grid needs to change by
/// less than `1e-8` under refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub modes: usize,
    pub steps_per_slice: usize,
    pub time_slices: usize,
    pub x_nodes: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            modes: 32768,
            steps_per_slice: 80,
            time_slices: 201,
            x_nodes: 513,
        }
    }
}

impl SpectralConfig {
    pub fn dt(&self) -> f64 {
        1.0 / ((self.time_slices - 1) * self.steps_per_slice) as f64
    }

    /// Twice the modes and half the time step, same output grid.
    pub fn refined(&self) -> Self {
        Self {
            modes: 2 * self.modes,
            steps_per_slice: 2 * self.steps_per_slice,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.modes.is_power_of_two() || self.modes < 4 {
            return Err(Error::config(format!(
                "spectral grid needs a power-of-two number of modes, got {}",
                self.modes
            )));
        }
        if self.x_nodes < 2 || !self.modes.is_multiple_of(self.x_nodes - 1) {
            return Err(Error::config(format!(
                "{} output nodes do not subsample a periodic grid of {} modes",
                self.x_nodes, self.modes
            )));
        }
        if self.time_slices < 2 || self.steps_per_slice == 0 {
            return Err(Error::config("spectral solve needs at least two time slices and one step per slice"));
        }
        Ok(())
    }
}

/// ETDRK4 coefficient vectors for a diagonal linear operator.
struct Etdrk4 {
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl Etdrk4 {
    /// Coefficients via a contour integral around each `dt * L` to avoid the
    /// cancellation of the closed forms near zero.
    fn new(linear: &[f64], dt: f64) -> Self {
        const CONTOUR: usize = 32;
        let roots: Vec<Complex64> = (1..=CONTOUR)
            .map(|j| Complex64::from_polar(1.0, PI * (j as f64 - 0.5) / CONTOUR as f64))
            .collect();
        let n = linear.len();
        let mut c = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in linear {
            let z = dt * l;
            c.e.push(z.exp());
            c.e2.push((z / 2.0).exp());
            let (mut q, mut f1, mut f2, mut f3) = (0.0, 0.0, 0.0, 0.0);
            for r in &roots {
                let lr = z + r;
                let ex = lr.exp();
                let lr3 = lr * lr * lr;
                q += (((lr / 2.0).exp() - 1.0) / lr).re;
                f1 += ((-4.0 - lr + ex * (4.0 - 3.0 * lr + lr * lr)) / lr3).re;
                f2 += ((2.0 + lr + ex * (lr - 2.0)) / lr3).re;
                f3 += ((-4.0 - 3.0 * lr - lr * lr + ex * (4.0 - lr)) / lr3).re;
            }
            let m = CONTOUR as f64;
            c.q.push(dt * q / m);
            c.f1.push(dt * f1 / m);
            c.f2.push(dt * f2 / m);
            c.f3.push(dt * f3 / m);
        }
        c
    }
}

struct Nonlinear {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    reaction: f64,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Nonlinear {
    /// Fourier coefficients of `-reaction * u^3` given those of `u`.
    fn apply(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        let n = v.len() as f64;
        self.buf.copy_from_slice(v);
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        for z in self.buf.iter_mut() {
            let u = z.re / n;
            *z = Complex64::new(-self.reaction * u * u * u, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.copy_from_slice(&self.buf);
    }
}

/// Solves `u_t = d u_xx + r (u - u^3)` on `[-1, 1)` with periodic boundary,
/// `u(0, x) = x^2 cos(pi x)`, by Fourier collocation in space and ETDRK4 in
/// time. Rows of the returned field are time slices, columns `x` nodes.
pub fn solve_allen_cahn_reference(equation: &Equation, config: &SpectralConfig) -> Result<GridField> {
    config.validate()?;
    let Equation::AllenCahn { diffusion, reaction } = *equation else {
        return Err(Error::config("spectral reference is only defined for Allen-Cahn"));
    };
    let n = config.modes;
    let dt = config.dt();
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let wavenumbers: Vec<f64> = (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            PI * k
        })
        .collect();
    let linear: Vec<f64> = wavenumbers.iter().map(|k| -diffusion * k * k + reaction).collect();
    let coef = Etdrk4::new(&linear, dt);

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let scratch_len = forward
        .get_inplace_scratch_len()
        .max(inverse.get_inplace_scratch_len());
    let mut nl = Nonlinear {
        forward: forward.clone(),
        inverse: inverse.clone(),
        reaction,
        buf: vec![Complex64::new(0.0, 0.0); n],
        scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
    };

    let stride = n / (config.x_nodes - 1);
    let out_x: Vec<f64> = (0..config.x_nodes)
        .map(|j| -1.0 + 2.0 * j as f64 / (config.x_nodes - 1) as f64)
        .collect();
    let out_t: Vec<f64> = (0..config.time_slices)
        .map(|i| i as f64 / (config.time_slices - 1) as f64)
        .collect();
    let mut values = Array2::zeros((config.time_slices, config.x_nodes));
    for (j, &x) in out_x.iter().enumerate() {
        values[[0, j]] = x * x * (PI * x).cos();
    }

    let mut v: Vec<Complex64> = xs
        .iter()
        .map(|&x| Complex64::new(x * x * (PI * x).cos(), 0.0))
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
    forward.process_with_scratch(&mut v, &mut scratch);

    let zero = Complex64::new(0.0, 0.0);
    let (mut nv, mut na, mut nb, mut nc) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let (mut a, mut b, mut c) = (vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut physical = vec![zero; n];
    for slice in 1..config.time_slices {
        for _ in 0..config.steps_per_slice {
            nl.apply(&v, &mut nv);
            for i in 0..n {
                a[i] = coef.e2[i] * v[i] + coef.q[i] * nv[i];
            }
            nl.apply(&a, &mut na);
            for i in 0..n {
                b[i] = coef.e2[i] * v[i] + coef.q[i] * na[i];
            }
            nl.apply(&b, &mut nb);
            for i in 0..n {
                c[i] = coef.e2[i] * a[i] + coef.q[i] * (2.0 * nb[i] - nv[i]);
            }
            nl.apply(&c, &mut nc);
            for i in 0..n {
                v[i] = coef.e[i] * v[i]
                    + nv[i] * coef.f1[i]
                    + 2.0 * (na[i] + nb[i]) * coef.f2[i]
                    + nc[i] * coef.f3[i];
            }
        }
        physical.copy_from_slice(&v);
        inverse.process_with_scratch(&mut physical, &mut scratch);
        for j in 0..config.x_nodes - 1 {
            values[[slice, j]] = physical[j * stride].re / n as f64;
        }
        values[[slice, config.x_nodes - 1]] = values[[slice, 0]];
        if values.row(slice).iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite);
        }
    }

    GridField::new(["t", "x"], [out_t, out_x], values, Some(1))
}

/// Relative L2 change of the reference field when modes are doubled and the
/// time step halved, measured over the whole output grid.
pub fn spectral_self_convergence(equation: &Equation, config: &SpectralConfig) -> Result<f64> {
    let coarse = solve_allen_cahn_reference(equation, config)?;
    let fine = solve_allen_cahn_reference(equation, &config.refined())?;
    super::relative_l2_field(&coarse, &fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::ALLEN_CAHN;

    fn small() -> SpectralConfig {
        SpectralConfig {
            modes: 256,
            steps_per_slice: 20,
            time_slices: 11,
            x_nodes: 129,
        }
    }

    #[test]
    fn initial_slice_is_exact_and_periodic() {
        let f = solve_allen_cahn_reference(&ALLEN_CAHN, &small()).unwrap();
        for (j, &x) in f.axes()[1].iter().enumerate() {
            assert!((f.values()[[0, j]] - x * x * (PI * x).cos()).abs() <= 1e-12);
        }
        for row in f.values().rows() {
            assert_eq!(row[0], row[row.len() - 1]);
        }
    }

    #[test]
    fn rejects_non_power_of_two_modes() {
        let mut cfg = small();
        cfg.modes = 300;
        assert!(matches!(solve_allen_cahn_reference(&ALLEN_CAHN, &cfg), Err(Error::Config(_))));
        let mut cfg = small();
        cfg.x_nodes = 100;
        assert!(matches!(solve_allen_cahn_reference(&ALLEN_CAHN, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn pure_diffusion_conserves_the_mean() {
        let eq = Equation::AllenCahn { diffusion: 0.01, reaction: 0.0 };
        let cfg = small();
        let f = solve_allen_cahn_reference(&eq, &cfg).unwrap();
        let n = cfg.x_nodes - 1;
        let mean = |i: usize| f.values().row(i).iter().take(n).sum::<f64>() / n as f64;
        assert!((mean(1) - mean(cfg.time_slices - 1)).abs() < 1e-12);
    }
}
