use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{BoundaryHandling, CollocationSet, Equation, LossWeights, PdeProblem};
use crate::diffcore::{Jet, JetBatch, JetLayout, Tape};
use crate::error::{Error, Result};
use crate::network::{record_prediction, NetworkConfig, NetworkParams, PreparedPoints};
use crate::par;

/// Points per work item. Chunk partials are reduced in chunk order, so the
/// result does not depend on how many threads evaluate them.
pub const CHUNK_POINTS: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub l_ic: f64,
    pub l_bc: f64,
    pub l_r: f64,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossTerms {
    pub fn compose(l_ic: f64, l_bc: f64, l_r: f64, weights: LossWeights) -> Self {
        Self {
            l_ic,
            l_bc,
            l_r,
            total: weights.ic * l_ic + weights.bc * l_bc + weights.r * l_r,
            weights,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Term {
    Residual,
    Initial,
    Boundary,
}

enum Task {
    Residual {
        prepared: PreparedPoints,
        coords: Array2<f64>,
    },
    Initial {
        prepared: PreparedPoints,
        targets: Vec<f64>,
    },
    Dirichlet {
        prepared: PreparedPoints,
    },
    Periodic {
        lo: PreparedPoints,
        hi: PreparedPoints,
    },
}

impl Task {
    fn term(&self) -> Term {
        match self {
            Task::Residual { .. } => Term::Residual,
            Task::Initial { .. } => Term::Initial,
            Task::Dirichlet { .. } | Task::Periodic { .. } => Term::Boundary,
        }
    }
}

/// Sum of squared residuals and, if `scale` is given, the output adjoint
/// `scale * 2 r * dr/d(jet)`.
fn residual_term(
    eq: &Equation,
    out: &JetBatch,
    coords: ArrayView2<'_, f64>,
    scale: Option<f64>,
) -> Result<(f64, Option<JetBatch>)> {
    let mut sum = 0.0;
    let mut adj = scale.map(|_| JetBatch::zeros(out.layout().clone(), out.points(), 1));
    for p in 0..out.points() {
        let jet = out.jet(p, 0);
        let row = coords.row(p);
        let (r, partial) = eq.residual_with_partials(&jet, row.as_slice().unwrap_or(&row.to_vec()))?;
        sum += r * r;
        if let (Some(adj), Some(scale)) = (adj.as_mut(), scale) {
            let k = 2.0 * r * scale;
            adj.set_jet(
                p,
                0,
                &Jet {
                    value: k * partial.value,
                    d1: partial.d1.iter().map(|v| k * v).collect(),
                    d2: partial.d2.iter().map(|v| k * v).collect(),
                },
            )?;
        }
    }
    Ok((sum, adj))
}

fn value_term(out: &JetBatch, targets: Option<&[f64]>, scale: Option<f64>) -> (f64, Option<JetBatch>) {
    let values = out.component(0);
    let mut sum = 0.0;
    let mut adj = scale.map(|_| JetBatch::zeros(out.layout().clone(), out.points(), 1));
    for p in 0..out.points() {
        let diff = values[[p, 0]] - targets.map_or(0.0, |t| t[p]);
        sum += diff * diff;
        if let (Some(adj), Some(scale)) = (adj.as_mut(), scale) {
            adj.component_mut(0)[[p, 0]] = 2.0 * diff * scale;
        }
    }
    (sum, adj)
}

/// Mismatch of value (and optionally `u_x`) between paired points one period apart.
fn periodic_term(lo: &JetBatch, hi: &JetBatch, scale: Option<f64>) -> (f64, Option<(JetBatch, JetBatch)>) {
    let comps: Vec<usize> = if lo.layout().coords() > 1 {
        vec![0, lo.layout().d1_component(1)]
    } else {
        vec![0]
    };
    let mut sum = 0.0;
    let mut adj = scale.map(|_| {
        (
            JetBatch::zeros(lo.layout().clone(), lo.points(), 1),
            JetBatch::zeros(hi.layout().clone(), hi.points(), 1),
        )
    });
    for &c in &comps {
        let (a, b) = (lo.component(c), hi.component(c));
        for p in 0..lo.points() {
            let diff = a[[p, 0]] - b[[p, 0]];
            sum += diff * diff;
            if let (Some((al, ah)), Some(scale)) = (adj.as_mut(), scale) {
                al.component_mut(c)[[p, 0]] = 2.0 * diff * scale;
                ah.component_mut(c)[[p, 0]] = -2.0 * diff * scale;
            }
        }
    }
    (sum, adj)
}

/// The PINN loss over a fixed collocation set, ready for repeated evaluation.
///
/// Embedded seeds for every point are computed once at construction (the
/// Fourier matrix is frozen), then each evaluation only runs the network.
pub struct PinnObjective {
    problem: PdeProblem,
    config: NetworkConfig,
    template: NetworkParams,
    tasks: Vec<Task>,
    n_residual: usize,
    n_ic: usize,
    n_bc: usize,
}

impl PinnObjective {
    pub fn new(
        problem: &PdeProblem,
        config: &NetworkConfig,
        params: &NetworkParams,
        colloc: &CollocationSet,
    ) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        if config.out_dim != 1 {
            return Err(Error::config("PINN losses need a scalar network output"));
        }
        let n_residual = colloc.residual.nrows();
        if n_residual == 0 {
            return Err(Error::config("empty residual point set"));
        }
        let n_ic = if problem.has_initial_condition() { colloc.ic.nrows() } else { 0 };
        if problem.has_initial_condition() && problem.weights.ic > 0.0 && n_ic == 0 {
            return Err(Error::config("empty initial-condition point set"));
        }
        let n_bc = if problem.bc == BoundaryHandling::LossTerm { colloc.bc.nrows() } else { 0 };
        if problem.bc == BoundaryHandling::LossTerm && n_bc == 0 {
            return Err(Error::config("empty boundary point set"));
        }

        let layout = problem.equation.layout();
        let value_only = JetLayout::value_only();
        let mut tasks = Vec::new();
        for r in par::chunk_ranges(n_residual, CHUNK_POINTS) {
            let coords = colloc.residual.slice(s![r, ..]).to_owned();
            let prepared = PreparedPoints::new(params, config, coords.view(), &layout)?;
            tasks.push(Task::Residual { prepared, coords });
        }
        for r in par::chunk_ranges(n_ic, CHUNK_POINTS) {
            let pts = colloc.ic.slice(s![r, ..]);
            let targets = pts.column(1).iter().map(|&x| problem.initial_value(x)).collect();
            let prepared = PreparedPoints::new(params, config, pts, &value_only)?;
            tasks.push(Task::Initial { prepared, targets });
        }
        if n_bc > 0 {
            match &colloc.bc_partner {
                None => {
                    for r in par::chunk_ranges(n_bc, CHUNK_POINTS) {
                        let prepared = PreparedPoints::new(params, config, colloc.bc.slice(s![r, ..]), &value_only)?;
                        tasks.push(Task::Dirichlet { prepared });
                    }
                }
                Some(partner) => {
                    let layout = if problem.periodic_derivative() {
                        JetLayout::new(2, vec![])?
                    } else {
                        value_only.clone()
                    };
                    for r in par::chunk_ranges(n_bc, CHUNK_POINTS) {
                        let lo = PreparedPoints::new(params, config, colloc.bc.slice(s![r.clone(), ..]), &layout)?;
                        let hi = PreparedPoints::new(params, config, partner.slice(s![r, ..]), &layout)?;
                        tasks.push(Task::Periodic { lo, hi });
                    }
                }
            }
        }
        Ok(Self {
            problem: problem.clone(),
            config: config.clone(),
            template: params.clone(),
            tasks,
            n_residual,
            n_ic,
            n_bc,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.template.len()
    }

    fn scale(&self, term: Term) -> f64 {
        let w = self.problem.weights;
        match term {
            Term::Residual => w.r / self.n_residual as f64,
            Term::Initial => w.ic / self.n_ic.max(1) as f64,
            Term::Boundary => w.bc / self.n_bc.max(1) as f64,
        }
    }

    fn run_task(&self, task: &Task, values: &[f64], with_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        let scale = with_grad.then(|| self.scale(task.term()));
        let mut tape = Tape::new(values);
        let (sum, seeds) = match task {
            Task::Residual { prepared, coords } => {
                let out = record_prediction(&mut tape, &self.template, &self.config, prepared)?;
                let (sum, adj) = residual_term(&self.problem.equation, tape.value(out), coords.view(), scale)?;
                (sum, adj.map(|a| vec![(out, a)]))
            }
            Task::Initial { prepared, targets } => {
                let out = record_prediction(&mut tape, &self.template, &self.config, prepared)?;
                let (sum, adj) = value_term(tape.value(out), Some(targets), scale);
                (sum, adj.map(|a| vec![(out, a)]))
            }
            Task::Dirichlet { prepared } => {
                let out = record_prediction(&mut tape, &self.template, &self.config, prepared)?;
                let (sum, adj) = value_term(tape.value(out), None, scale);
                (sum, adj.map(|a| vec![(out, a)]))
            }
            Task::Periodic { lo, hi } => {
                let a = record_prediction(&mut tape, &self.template, &self.config, lo)?;
                let b = record_prediction(&mut tape, &self.template, &self.config, hi)?;
                let (sum, adj) = periodic_term(tape.value(a), tape.value(b), scale);
                (sum, adj.map(|(al, ah)| vec![(a, al), (b, ah)]))
            }
        };
        let grad = match seeds {
            Some(seeds) => {
                let mut grad = vec![0.0; values.len()];
                tape.backward(seeds, &mut grad)?;
                Some(grad)
            }
            None => None,
        };
        Ok((sum, grad))
    }

    fn run(&self, values: &[f64], with_grad: bool) -> Result<(LossTerms, Option<Vec<f64>>)> {
        if values.len() != self.template.len() {
            return Err(Error::config(format!(
                "parameter vector has {} entries, network needs {}",
                values.len(),
                self.template.len()
            )));
        }
        let parts = par::map_ordered(&self.tasks, |task| self.run_task(task, values, with_grad));
        let (mut s_r, mut s_ic, mut s_bc) = (0.0, 0.0, 0.0);
        let mut grad = with_grad.then(|| vec![0.0; values.len()]);
        for (task, part) in self.tasks.iter().zip(parts) {
            let (sum, g) = part?;
            match task.term() {
                Term::Residual => s_r += sum,
                Term::Initial => s_ic += sum,
                Term::Boundary => s_bc += sum,
            }
            if let (Some(acc), Some(g)) = (grad.as_mut(), g) {
                acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
        }
        let terms = LossTerms::compose(
            if self.n_ic > 0 { s_ic / self.n_ic as f64 } else { 0.0 },
            if self.n_bc > 0 { s_bc / self.n_bc as f64 } else { 0.0 },
            s_r / self.n_residual as f64,
            self.problem.weights,
        );
        if !terms.total.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok((terms, grad))
    }

    pub fn evaluate(&self, values: &[f64]) -> Result<LossTerms> {
        Ok(self.run(values, false)?.0)
    }

    pub fn evaluate_with_grad(&self, values: &[f64]) -> Result<(LossTerms, Vec<f64>)> {
        let (terms, grad) = self.run(values, true)?;
        Ok((terms, grad.expect("gradient requested")))
    }

    /// Total loss and gradient, the form the optimisers consume.
    pub fn value_and_grad(&self, values: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (terms, grad) = self.evaluate_with_grad(values)?;
        Ok((terms.total, grad))
    }
}

/// Loss terms of the network on the given collocation set.
pub fn assemble_loss(
    problem: &PdeProblem,
    params: &NetworkParams,
    config: &NetworkConfig,
    colloc: &CollocationSet,
) -> Result<LossTerms> {
    PinnObjective::new(problem, config, params, colloc)?.evaluate(params.values())
}

/// Loss terms of an arbitrary field supplied as jets, e.g. an exact solution.
///
/// `field(points, layout)` must return width-1 jets at each row of `points`.
pub fn assemble_loss_from_jets<F>(problem: &PdeProblem, colloc: &CollocationSet, field: F) -> Result<LossTerms>
where
    F: Fn(ArrayView2<'_, f64>, &JetLayout) -> Result<JetBatch>,
{
    problem.validate()?;
    if colloc.residual.nrows() == 0 {
        return Err(Error::config("empty residual point set"));
    }
    let out = field(colloc.residual.view(), &problem.equation.layout())?;
    let (s_r, _) = residual_term(&problem.equation, &out, colloc.residual.view(), None)?;
    let l_r = s_r / colloc.residual.nrows() as f64;

    let l_ic = if problem.has_initial_condition() && colloc.ic.nrows() > 0 {
        let out = field(colloc.ic.view(), &JetLayout::value_only())?;
        let targets: Vec<f64> = colloc.ic.column(1).iter().map(|&x| problem.initial_value(x)).collect();
        value_term(&out, Some(&targets), None).0 / colloc.ic.nrows() as f64
    } else {
        0.0
    };

    let l_bc = if problem.bc == BoundaryHandling::LossTerm && colloc.bc.nrows() > 0 {
        let sum = match &colloc.bc_partner {
            None => value_term(&field(colloc.bc.view(), &JetLayout::value_only())?, None, None).0,
            Some(partner) => {
                let layout = if problem.periodic_derivative() {
                    JetLayout::new(2, vec![])?
                } else {
                    JetLayout::value_only()
                };
                let lo = field(colloc.bc.view(), &layout)?;
                let hi = field(partner.view(), &layout)?;
                periodic_term(&lo, &hi, None).0
            }
        };
        sum / colloc.bc.nrows() as f64
    } else {
        0.0
    };
    Ok(LossTerms::compose(l_ic, l_bc, l_r, problem.weights))
}
