use ndarray::{linalg::general_mat_mul, s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};

use super::jet::{Activation, JetBatch};
use super::kernels::{hadamard_backward, tanh_backward};
use crate::error::{Error, Result};

/// A row-major weight matrix stored inside a flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixSlot {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MatrixSlot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn view<'a>(&self, flat: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &flat[self.offset..self.offset + self.len()])
            .expect("slot inside parameter vector")
    }

    pub fn view_mut<'a>(&self, flat: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        let len = self.len();
        ArrayViewMut2::from_shape((self.rows, self.cols), &mut flat[self.offset..self.offset + len])
            .expect("slot inside parameter vector")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VectorSlot {
    pub offset: usize,
    pub len: usize,
}

impl VectorSlot {
    pub fn view<'a>(&self, flat: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&flat[self.offset..self.offset + self.len])
    }

    pub fn view_mut<'a>(&self, flat: &'a mut [f64]) -> ArrayViewMut1<'a, f64> {
        ArrayViewMut1::from(&mut flat[self.offset..self.offset + self.len])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    Affine {
        input: NodeId,
        weight: MatrixSlot,
        bias: VectorSlot,
    },
    Activation {
        input: NodeId,
        act: Activation,
    },
    Hadamard(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// Product with a jet that does not depend on the parameters.
    MulConst {
        input: NodeId,
        factor: JetBatch,
    },
    /// Sum with a jet that does not depend on the parameters.
    AddConst {
        input: NodeId,
    },
}

struct Node {
    op: Op,
    value: JetBatch,
}

/// Record of a jet program over a flat parameter vector.
///
/// Forward values are computed eagerly as nodes are pushed. `backward` walks
/// the nodes in reverse, propagating adjoints of every jet component and
/// accumulating parameter gradients.
pub struct Tape<'p> {
    params: &'p [f64],
    nodes: Vec<Node>,
}

/// Scalar loss together with its adjoint seeds on tape outputs.
pub struct LossSeed {
    pub loss: f64,
    pub seeds: Vec<(NodeId, JetBatch)>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p [f64] {
        self.params
    }

    pub fn value(&self, id: NodeId) -> &JetBatch {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: JetBatch) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, batch: JetBatch) -> NodeId {
        self.push(Op::Leaf, batch)
    }

    pub fn affine(&mut self, input: NodeId, weight: MatrixSlot, bias: VectorSlot) -> Result<NodeId> {
        if weight.offset + weight.len() > self.params.len() || bias.offset + bias.len > self.params.len() {
            return Err(Error::config("parameter slot outside the parameter vector"));
        }
        let value = self
            .value(input)
            .affine(weight.view(self.params), bias.view(self.params))?;
        Ok(self.push(Op::Affine { input, weight, bias }, value))
    }

    pub fn activation(&mut self, input: NodeId, act: Activation) -> NodeId {
        let value = self.value(input).activate(act);
        self.push(Op::Activation { input, act }, value)
    }

    pub fn hadamard(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId> {
        let value = self.value(lhs).hadamard(self.value(rhs))?;
        Ok(self.push(Op::Hadamard(lhs, rhs), value))
    }

    pub fn add(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId> {
        let value = self.value(lhs).add(self.value(rhs))?;
        Ok(self.push(Op::Add(lhs, rhs), value))
    }

    pub fn mul_const(&mut self, input: NodeId, factor: JetBatch) -> Result<NodeId> {
        let value = self.value(input).hadamard(&factor)?;
        Ok(self.push(Op::MulConst { input, factor }, value))
    }

    pub fn add_const(&mut self, input: NodeId, offset: &JetBatch) -> Result<NodeId> {
        let value = self.value(input).add(offset)?;
        Ok(self.push(Op::AddConst { input }, value))
    }

    /// Accumulates `d(loss)/d(params)` into `grad` given adjoint seeds on outputs.
    pub fn backward(&self, seeds: Vec<(NodeId, JetBatch)>, grad: &mut [f64]) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::config(format!(
                "gradient buffer has {} entries, parameters {}",
                grad.len(),
                self.params.len()
            )));
        }
        let mut adj: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        for (id, seed) in seeds {
            let node = &self.nodes[id.0];
            if seed.layout() != node.value.layout()
                || seed.points() != node.value.points()
                || seed.width() != node.value.width()
            {
                return Err(Error::config("adjoint seed shape differs from its node"));
            }
            accumulate(&mut adj[id.0], seed.into_data());
        }

        for idx in (0..self.nodes.len()).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            let layout = node.value.layout();
            match &node.op {
                Op::Leaf => {}
                Op::Affine { input, weight, bias } => {
                    let x = self.value(*input);
                    let mut gw = weight.view_mut(grad);
                    general_mat_mul(1.0, &g.t(), x.data(), 1.0, &mut gw);
                    let gb = g.slice(s![..node.value.points(), ..]).sum_axis(Axis(0));
                    let mut gb_view = bias.view_mut(grad);
                    gb_view += &gb;
                    if self.needs_adjoint(*input) {
                        let mut gx = Array2::zeros((g.nrows(), weight.cols));
                        general_mat_mul(1.0, &g, &weight.view(self.params), 0.0, &mut gx);
                        accumulate(&mut adj[input.0], gx);
                    }
                }
                Op::Activation { input, act } => {
                    if !self.needs_adjoint(*input) {
                        continue;
                    }
                    let gx = match act {
                        Activation::Identity => g,
                        Activation::Tanh => {
                            let x = self.value(*input);
                            let plane = x.points() * x.width();
                            let mut gx = Array2::zeros(g.raw_dim());
                            tanh_backward(
                                layout,
                                plane,
                                x.data().as_slice().expect("standard layout"),
                                node.value.data().as_slice().expect("standard layout"),
                                g.as_slice().expect("standard layout"),
                                gx.as_slice_mut().expect("standard layout"),
                            );
                            gx
                        }
                    };
                    accumulate(&mut adj[input.0], gx);
                }
                Op::Hadamard(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let plane = va.points() * va.width();
                    let gs = g.as_slice().expect("standard layout");
                    if self.needs_adjoint(*a) {
                        let mut ga = Array2::zeros(g.raw_dim());
                        hadamard_backward(
                            layout,
                            plane,
                            vb.data().as_slice().expect("standard layout"),
                            gs,
                            ga.as_slice_mut().expect("standard layout"),
                        );
                        accumulate(&mut adj[a.0], ga);
                    }
                    if self.needs_adjoint(*b) {
                        let mut gb = Array2::zeros(g.raw_dim());
                        hadamard_backward(
                            layout,
                            plane,
                            va.data().as_slice().expect("standard layout"),
                            gs,
                            gb.as_slice_mut().expect("standard layout"),
                        );
                        accumulate(&mut adj[b.0], gb);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs_adjoint(*a) {
                        accumulate(&mut adj[a.0], g.clone());
                    }
                    if self.needs_adjoint(*b) {
                        accumulate(&mut adj[b.0], g);
                    }
                }
                Op::MulConst { input, factor } => {
                    if self.needs_adjoint(*input) {
                        let plane = factor.points() * factor.width();
                        let mut gx = Array2::zeros(g.raw_dim());
                        hadamard_backward(
                            layout,
                            plane,
                            factor.data().as_slice().expect("standard layout"),
                            g.as_slice().expect("standard layout"),
                            gx.as_slice_mut().expect("standard layout"),
                        );
                        accumulate(&mut adj[input.0], gx);
                    }
                }
                Op::AddConst { input } => {
                    if self.needs_adjoint(*input) {
                        accumulate(&mut adj[input.0], g);
                    }
                }
            }
        }
        Ok(())
    }

    fn needs_adjoint(&self, id: NodeId) -> bool {
        !matches!(self.nodes[id.0].op, Op::Leaf)
    }
}

fn accumulate(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}

/// Evaluates a recorded loss and its gradient with respect to `params`.
///
/// `record` builds the jet program on a fresh tape and returns the scalar loss
/// with adjoint seeds for the nodes it was computed from.
pub fn loss_and_param_grad<F>(params: &[f64], record: F) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&mut Tape<'_>) -> Result<LossSeed>,
{
    let mut tape = Tape::new(params);
    let LossSeed { loss, seeds } = record(&mut tape)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut grad = vec![0.0; params.len()];
    tape.backward(seeds, &mut grad)?;
    Ok((loss, grad))
}
