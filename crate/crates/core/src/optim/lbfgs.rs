use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LbfgsConfig {
    pub max_iter: usize,
    /// Length of the first trial step along each search direction.
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Number of stored curvature pairs. Zero gives steepest descent.
    #[serde(default = "default_history")]
    pub history: usize,
    /// Stop once the largest gradient entry is at most this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Function evaluations allowed per line search.
    #[serde(default = "default_line_search_evals")]
    pub line_search_evals: usize,
}

fn default_lr() -> f64 {
    1.0
}

fn default_history() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-12
}

fn default_c1() -> f64 {
    1e-4
}

fn default_c2() -> f64 {
    0.9
}

fn default_line_search_evals() -> usize {
    25
}

impl LbfgsConfig {
    pub fn new(max_iter: usize) -> Self {
        Self {
            max_iter,
            lr: default_lr(),
            history: default_history(),
            tol: default_tol(),
            c1: default_c1(),
            c2: default_c2(),
            line_search_evals: default_line_search_evals(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::config(format!(
                "line search needs 0 < c1 < c2 < 1, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("L-BFGS initial step must be positive, got {}", self.lr)));
        }
        if self.tol < 0.0 || self.line_search_evals == 0 {
            return Err(Error::config("L-BFGS tolerance must be >= 0 and line search evals > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    Converged,
    MaxIterations,
    /// No step satisfying the Wolfe conditions was found; the best point seen
    /// is returned.
    LineSearchFailed,
}

/// State after one accepted iteration (iteration 0 is the starting point).
#[derive(Clone, Debug, PartialEq)]
pub struct LbfgsIteration {
    pub iteration: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub params: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub status: LbfgsStatus,
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<LbfgsIteration>,
}

struct Probe {
    alpha: f64,
    f: f64,
    slope: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

enum Search {
    Accepted(Probe),
    Failed(Probe),
}

/// Minimizes `f_and_grad` from `x0` with limited-memory BFGS.
///
/// `observe` is called for the starting point and after every accepted
/// iteration. A non-finite loss during the line search counts as a rejected
/// trial; any other evaluation error aborts the run.
pub fn lbfgs_minimize<F, C>(
    mut f_and_grad: F,
    x0: Vec<f64>,
    config: &LbfgsConfig,
    mut observe: C,
) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(&LbfgsIteration),
{
    config.validate()?;
    let (mut f, mut g) = f_and_grad(&x0)?;
    if g.len() != x0.len() {
        return Err(Error::config("gradient length differs from parameter length"));
    }
    let mut x = x0;
    let mut evaluations = 1;
    let mut trace = Vec::new();
    let mut record = |trace: &mut Vec<LbfgsIteration>, it: LbfgsIteration| {
        observe(&it);
        trace.push(it);
    };
    record(
        &mut trace,
        LbfgsIteration {
            iteration: 0,
            f,
            grad_norm: max_abs(&g),
            step: 0.0,
            evaluations,
        },
    );

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut status = if max_abs(&g) <= config.tol {
        LbfgsStatus::Converged
    } else {
        LbfgsStatus::MaxIterations
    };
    let mut iterations = 0;

    while status != LbfgsStatus::Converged && iterations < config.max_iter {
        let mut d = two_loop(&g, &history);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // Without curvature pairs the direction is the raw gradient, so the
        // first trial is shortened to unit length in the 1-norm.
        let alpha0 = if history.is_empty() {
            config.lr * (1.0 / g.iter().map(|v| v.abs()).sum::<f64>()).min(1.0)
        } else {
            config.lr
        };

        let start = Probe {
            alpha: 0.0,
            f,
            slope,
            x: x.clone(),
            g: g.clone(),
        };
        let mut eval = |alpha: f64| -> Result<Probe> {
            evaluations += 1;
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            match f_and_grad(&xt) {
                Ok((ft, gt)) if ft.is_finite() => Ok(Probe {
                    alpha,
                    f: ft,
                    slope: dot(&gt, &d),
                    x: xt,
                    g: gt,
                }),
                Ok(_) | Err(Error::NonFinite) => Ok(Probe {
                    alpha,
                    f: f64::INFINITY,
                    slope: f64::NAN,
                    x: xt,
                    g: Vec::new(),
                }),
                Err(e) => Err(e),
            }
        };
        let outcome = line_search(&mut eval, start, alpha0, config)?;

        let (probe, failed) = match outcome {
            Search::Accepted(p) => (p, false),
            Search::Failed(p) => (p, true),
        };
        let moved = probe.alpha > 0.0 && probe.f <= f;
        if moved {
            if config.history > 0 {
                let s: Vec<f64> = probe.x.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = probe.g.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 0.0 && sy.is_finite() {
                    if history.len() == config.history {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
            }
            x = probe.x;
            f = probe.f;
            g = probe.g;
            iterations += 1;
            record(
                &mut trace,
                LbfgsIteration {
                    iteration: iterations,
                    f,
                    grad_norm: max_abs(&g),
                    step: probe.alpha,
                    evaluations,
                },
            );
        }
        if failed {
            status = LbfgsStatus::LineSearchFailed;
            break;
        }
        if max_abs(&g) <= config.tol {
            status = LbfgsStatus::Converged;
        }
    }

    Ok(LbfgsResult {
        params: x,
        f,
        grad: g,
        status,
        iterations,
        evaluations,
        trace,
    })
}

fn line_search<E>(eval: &mut E, start: Probe, alpha0: f64, config: &LbfgsConfig) -> Result<Search>
where
    E: FnMut(f64) -> Result<Probe>,
{
    let (f0, slope0) = (start.f, start.slope);
    let armijo = |p: &Probe| p.f.is_finite() && p.f <= f0 + config.c1 * p.alpha * slope0;
    let curvature = |p: &Probe| p.slope.abs() <= -config.c2 * slope0;

    let mut budget = config.line_search_evals;
    let mut prev = start;
    let mut alpha = alpha0;
    let mut first = true;
    while budget > 0 {
        budget -= 1;
        let p = eval(alpha)?;
        if !armijo(&p) || (!first && p.f >= prev.f) {
            return zoom(eval, prev, p, f0, slope0, budget, config);
        }
        if curvature(&p) {
            return Ok(Search::Accepted(p));
        }
        if p.slope >= 0.0 {
            return zoom(eval, p, prev, f0, slope0, budget, config);
        }
        alpha *= 2.0;
        prev = p;
        first = false;
    }
    Ok(Search::Failed(prev))
}

/// Narrows a bracket `[lo, hi]` known to contain a strong-Wolfe step. `lo` is
/// always the lowest sufficient-decrease point seen.
fn zoom<E>(
    eval: &mut E,
    mut lo: Probe,
    mut hi: Probe,
    f0: f64,
    slope0: f64,
    mut budget: usize,
    config: &LbfgsConfig,
) -> Result<Search>
where
    E: FnMut(f64) -> Result<Probe>,
{
    while budget > 0 {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= f64::EPSILON * b.max(f64::MIN_POSITIVE) {
            break;
        }
        let trial = cubic_minimizer(&lo, &hi)
            .filter(|t| *t >= a + 0.1 * width && *t <= b - 0.1 * width)
            .unwrap_or(0.5 * (a + b));
        budget -= 1;
        let p = eval(trial)?;
        if !p.f.is_finite() || p.f > f0 + config.c1 * p.alpha * slope0 || p.f >= lo.f {
            hi = p;
        } else {
            if p.slope.abs() <= -config.c2 * slope0 {
                return Ok(Search::Accepted(p));
            }
            if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    Ok(Search::Failed(lo))
}

/// Minimizer of the cubic matching values and slopes at both probes.
fn cubic_minimizer(p: &Probe, q: &Probe) -> Option<f64> {
    if !(p.f.is_finite() && q.f.is_finite() && p.slope.is_finite() && q.slope.is_finite()) {
        return None;
    }
    let d1 = p.slope + q.slope - 3.0 * (p.f - q.f) / (p.alpha - q.alpha);
    let disc = d1 * d1 - p.slope * q.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (q.alpha - p.alpha).signum() * disc.sqrt();
    let t = q.alpha - (q.alpha - p.alpha) * (q.slope + d2 - d1) / (q.slope - p.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(-a, y, &mut q);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(a - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
