use ndarray::{linalg::general_mat_mul, s, Array2, ArrayView1, ArrayView2, ArrayViewMut2};
use serde::{Deserialize, Serialize};

use super::kernels::{hadamard_forward, tanh_forward};
use crate::error::{Error, Result};

/// Which input derivatives a jet carries.
///
/// Every tracked coordinate gets a first derivative slot. `second` lists the
/// coordinates whose pure second derivative is also tracked, in slot order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JetLayout {
    coords: usize,
    second: Vec<usize>,
}

impl JetLayout {
    pub fn new(coords: usize, second: Vec<usize>) -> Result<Self> {
        for (j, &c) in second.iter().enumerate() {
            if c >= coords {
                return Err(Error::config(format!(
                    "second-derivative slot {j} refers to coordinate {c}, only {coords} tracked"
                )));
            }
            if second[..j].contains(&c) {
                return Err(Error::config(format!(
                    "coordinate {c} listed twice for second derivatives"
                )));
            }
        }
        Ok(Self { coords, second })
    }

    /// Value only, no derivatives.
    pub fn value_only() -> Self {
        Self {
            coords: 0,
            second: Vec::new(),
        }
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn second(&self) -> &[usize] {
        &self.second
    }

    /// Number of stored components: value, first derivatives, second derivatives.
    pub fn components(&self) -> usize {
        1 + self.coords + self.second.len()
    }

    pub fn d1_component(&self, coord: usize) -> usize {
        1 + coord
    }

    pub fn d2_component(&self, slot: usize) -> usize {
        1 + self.coords + slot
    }

    /// Second-derivative slot for `coord`, if tracked.
    pub fn d2_slot(&self, coord: usize) -> Option<usize> {
        self.second.iter().position(|&c| c == coord)
    }
}

/// Value plus first and pure second input derivatives at a single point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, layout: &JetLayout) -> Self {
        Self {
            value,
            d1: vec![0.0; layout.coords()],
            d2: vec![0.0; layout.second().len()],
        }
    }

    /// The jet of the coordinate function `x_coord` evaluated at `value`.
    pub fn variable(value: f64, coord: usize, layout: &JetLayout) -> Self {
        let mut jet = Self::constant(value, layout);
        jet.d1[coord] = 1.0;
        jet
    }

    pub fn zero(layout: &JetLayout) -> Self {
        Self::constant(0.0, layout)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.d1.iter().all(|v| v.is_finite())
            && self.d2.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

/// Jets for a batch of points and a layer of channels.
///
/// Storage is a `(components * points) x width` matrix, component-major:
/// rows `c * points .. (c + 1) * points` hold component `c` of every point.
/// Affine maps then act on all components with a single matrix product.
#[derive(Clone, Debug, PartialEq)]
pub struct JetBatch {
    layout: JetLayout,
    points: usize,
    data: Array2<f64>,
}

impl JetBatch {
    pub fn zeros(layout: JetLayout, points: usize, width: usize) -> Self {
        let rows = layout.components() * points;
        Self {
            layout,
            points,
            data: Array2::zeros((rows, width)),
        }
    }

    pub fn from_data(layout: JetLayout, points: usize, data: Array2<f64>) -> Result<Self> {
        if data.nrows() != layout.components() * points {
            return Err(Error::config(format!(
                "jet batch has {} rows, expected {} components x {} points",
                data.nrows(),
                layout.components(),
                points
            )));
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self {
            layout,
            points,
            data,
        })
    }

    /// Builds a batch from per-point, per-channel jets (`jets[p][k]`).
    pub fn from_jets(layout: JetLayout, jets: &[Vec<Jet>]) -> Result<Self> {
        let width = jets.first().map_or(0, |row| row.len());
        let mut batch = Self::zeros(layout, jets.len(), width);
        for (p, row) in jets.iter().enumerate() {
            if row.len() != width {
                return Err(Error::config("ragged jet rows"));
            }
            for (k, jet) in row.iter().enumerate() {
                batch.set_jet(p, k, jet)?;
            }
        }
        Ok(batch)
    }

    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> ArrayView2<'_, f64> {
        let p = self.points;
        self.data.slice(s![c * p..(c + 1) * p, ..])
    }

    pub fn component_mut(&mut self, c: usize) -> ArrayViewMut2<'_, f64> {
        let p = self.points;
        self.data.slice_mut(s![c * p..(c + 1) * p, ..])
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.component(0)
    }

    pub fn jet(&self, point: usize, channel: usize) -> Jet {
        let p = self.points;
        let at = |c: usize| self.data[[c * p + point, channel]];
        Jet {
            value: at(0),
            d1: (0..self.layout.coords())
                .map(|i| at(self.layout.d1_component(i)))
                .collect(),
            d2: (0..self.layout.second().len())
                .map(|j| at(self.layout.d2_component(j)))
                .collect(),
        }
    }

    pub fn set_jet(&mut self, point: usize, channel: usize, jet: &Jet) -> Result<()> {
        if jet.d1.len() != self.layout.coords() || jet.d2.len() != self.layout.second().len() {
            return Err(Error::config("jet does not match batch layout"));
        }
        let p = self.points;
        self.data[[point, channel]] = jet.value;
        for (i, &d) in jet.d1.iter().enumerate() {
            self.data[[self.layout.d1_component(i) * p + point, channel]] = d;
        }
        for (j, &d) in jet.d2.iter().enumerate() {
            self.data[[self.layout.d2_component(j) * p + point, channel]] = d;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.layout != other.layout
            || self.points != other.points
            || self.width() != other.width()
        {
            return Err(Error::config(format!(
                "{what}: shape mismatch ({} pts x {} wide vs {} pts x {} wide)",
                self.points,
                self.width(),
                other.points,
                other.width()
            )));
        }
        Ok(())
    }

    /// `W * x + b` applied to every point. Derivative rows see only `W`.
    pub fn affine(&self, weight: ArrayView2<'_, f64>, bias: ArrayView1<'_, f64>) -> Result<Self> {
        if weight.ncols() != self.width() || bias.len() != weight.nrows() {
            return Err(Error::config(format!(
                "affine layer is {}x{} with bias {}, input width is {}",
                weight.nrows(),
                weight.ncols(),
                bias.len(),
                self.width()
            )));
        }
        let mut data = Array2::zeros((self.data.nrows(), weight.nrows()));
        general_mat_mul(1.0, &self.data, &weight.t(), 0.0, &mut data);
        data.slice_mut(s![..self.points, ..])
            .rows_mut()
            .into_iter()
            .for_each(|mut row| row += &bias);
        Ok(Self {
            layout: self.layout.clone(),
            points: self.points,
            data,
        })
    }

    /// Componentwise activation with the order-two chain rule.
    pub fn activate(&self, act: Activation) -> Self {
        match act {
            Activation::Identity => self.clone(),
            Activation::Tanh => {
                let mut out = Array2::zeros(self.data.raw_dim());
                {
                    let src = self.data.as_slice().expect("standard layout");
                    let dst = out.as_slice_mut().expect("standard layout");
                    tanh_forward(&self.layout, self.points * self.width(), src, dst);
                }
                Self {
                    layout: self.layout.clone(),
                    points: self.points,
                    data: out,
                }
            }
        }
    }

    /// Element-wise product with the order-two Leibniz rule.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "hadamard")?;
        let mut out = Array2::zeros(self.data.raw_dim());
        {
            let a = self.data.as_slice().expect("standard layout");
            let b = other.data.as_slice().expect("standard layout");
            let dst = out.as_slice_mut().expect("standard layout");
            hadamard_forward(&self.layout, self.points * self.width(), a, b, dst);
        }
        Ok(Self {
            layout: self.layout.clone(),
            points: self.points,
            data: out,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            layout: self.layout.clone(),
            points: self.points,
            data: &self.data + &other.data,
        })
    }

    /// Copies a contiguous range of points (all components) into a new batch.
    pub fn select_points(&self, points: std::ops::Range<usize>) -> Self {
        let n = points.len();
        let comps = self.layout.components();
        let mut data = Array2::zeros((comps * n, self.width()));
        for c in 0..comps {
            data.slice_mut(s![c * n..(c + 1) * n, ..]).assign(&self.data.slice(s![
                c * self.points + points.start..c * self.points + points.end,
                ..
            ]));
        }
        Self {
            layout: self.layout.clone(),
            points: n,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn layout_tx() -> JetLayout {
        JetLayout::new(2, vec![1]).unwrap()
    }

    #[test]
    fn layout_rejects_bad_second_slots() {
        assert!(JetLayout::new(2, vec![2]).is_err());
        assert!(JetLayout::new(2, vec![1, 1]).is_err());
        assert_eq!(layout_tx().components(), 4);
    }

    #[test]
    fn identity_affine_is_a_no_op() {
        let layout = layout_tx();
        let jets = vec![vec![
            Jet { value: 0.3, d1: vec![1.0, -2.0], d2: vec![0.5] },
            Jet { value: -1.1, d1: vec![0.25, 4.0], d2: vec![-3.0] },
        ]];
        let batch = JetBatch::from_jets(layout, &jets).unwrap();
        let w = Array2::eye(2);
        let b = Array1::zeros(2);
        let out = batch.affine(w.view(), b.view()).unwrap();
        assert_eq!(out, batch);
    }

    #[test]
    fn zero_weight_affine_gives_constant() {
        let layout = layout_tx();
        let jets = vec![vec![Jet { value: 0.3, d1: vec![1.0, -2.0], d2: vec![0.5] }; 3]];
        let batch = JetBatch::from_jets(layout.clone(), &jets).unwrap();
        let w = Array2::zeros((2, 3));
        let b = array![1.5, -0.5];
        let out = batch.affine(w.view(), b.view()).unwrap();
        assert_eq!(out.jet(0, 0), Jet::constant(1.5, &layout));
        assert_eq!(out.jet(0, 1), Jet::constant(-0.5, &layout));
    }

    #[test]
    fn affine_dimension_mismatch_is_config_error() {
        let batch = JetBatch::zeros(layout_tx(), 2, 3);
        let w = Array2::zeros((2, 4));
        let b = Array1::zeros(2);
        assert!(matches!(batch.affine(w.view(), b.view()), Err(Error::Config(_))));
    }

    #[test]
    fn tanh_at_origin() {
        let layout = JetLayout::new(1, vec![0]).unwrap();
        let seed = Jet { value: 0.0, d1: vec![1.0], d2: vec![0.0] };
        let batch = JetBatch::from_jets(layout, &[vec![seed.clone()]]).unwrap();
        let out = batch.activate(Activation::Tanh).jet(0, 0);
        assert_eq!(out, seed);
        assert_eq!(batch.activate(Activation::Identity), batch);
    }

    #[test]
    fn tanh_at_one_matches_closed_form() {
        let layout = JetLayout::new(1, vec![0]).unwrap();
        let seed = Jet { value: 1.0, d1: vec![1.0], d2: vec![0.0] };
        let out = JetBatch::from_jets(layout, &[vec![seed]])
            .unwrap()
            .activate(Activation::Tanh)
            .jet(0, 0);
        let t = 1.0_f64.tanh();
        assert_eq!(out.value, t);
        assert!((out.d1[0] - (1.0 - t * t)).abs() < 1e-15);
        assert!((out.d2[0] + 2.0 * t * (1.0 - t * t)).abs() < 1e-15);
        // central differences on tanh itself
        let h: f64 = 1e-4;
        let fd1 = ((1.0 + h).tanh() - (1.0 - h).tanh()) / (2.0 * h);
        let fd2 = ((1.0 + h).tanh() - 2.0 * t + (1.0 - h).tanh()) / (h * h);
        assert!((out.d1[0] - fd1).abs() < 1e-8);
        assert!((out.d2[0] - fd2).abs() < 1e-6);
    }

    #[test]
    fn hadamard_square_rule_and_constant_scaling() {
        let layout = JetLayout::new(1, vec![0]).unwrap();
        let x = 0.7;
        let a = JetBatch::from_jets(layout.clone(), &[vec![Jet::variable(x, 0, &layout)]]).unwrap();
        let sq = a.hadamard(&a).unwrap().jet(0, 0);
        assert_eq!(sq, Jet { value: x * x, d1: vec![2.0 * x], d2: vec![2.0] });

        let j = Jet { value: 1.5, d1: vec![-0.5], d2: vec![2.5] };
        let a = JetBatch::from_jets(layout.clone(), &[vec![j.clone()]]).unwrap();
        let c = JetBatch::from_jets(layout.clone(), &[vec![Jet::constant(3.0, &layout)]]).unwrap();
        let out = a.hadamard(&c).unwrap().jet(0, 0);
        assert_eq!(out, Jet { value: 4.5, d1: vec![-1.5], d2: vec![7.5] });
    }

    #[test]
    fn add_identities() {
        let layout = layout_tx();
        let j = Jet { value: 0.4, d1: vec![1.0, 2.0], d2: vec![3.0] };
        let a = JetBatch::from_jets(layout.clone(), &[vec![j.clone()]]).unwrap();
        let zero = JetBatch::zeros(layout.clone(), 1, 1);
        assert_eq!(a.add(&zero).unwrap(), a);
        let neg = JetBatch::from_data(layout.clone(), 1, -a.data().clone()).unwrap();
        assert_eq!(a.add(&neg).unwrap().jet(0, 0), Jet::zero(&layout));
        assert!(a.add(&JetBatch::zeros(layout, 2, 1)).is_err());
    }

    #[test]
    fn select_points_keeps_components_aligned() {
        let layout = layout_tx();
        let jets: Vec<Vec<Jet>> = (0..5)
            .map(|p| {
                let p = p as f64;
                vec![Jet { value: p, d1: vec![10.0 + p, 20.0 + p], d2: vec![30.0 + p] }]
            })
            .collect();
        let batch = JetBatch::from_jets(layout, &jets).unwrap();
        let sub = batch.select_points(2..4);
        assert_eq!(sub.points(), 2);
        assert_eq!(sub.jet(0, 0), jets[2][0]);
        assert_eq!(sub.jet(1, 0), jets[3][0]);
    }
}
