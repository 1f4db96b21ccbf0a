use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

/// A scalar field sampled on a tensor grid of two axes.
///
/// Rows follow the first axis. When `periodic_axis` is set, the last node on
/// that axis repeats the first and is left out of every norm.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    names: [String; 2],
    axes: [Vec<f64>; 2],
    values: Array2<f64>,
    periodic_axis: Option<usize>,
}

impl GridField {
    pub fn new(
        names: [&str; 2],
        axes: [Vec<f64>; 2],
        values: Array2<f64>,
        periodic_axis: Option<usize>,
    ) -> Result<Self> {
        if values.dim() != (axes[0].len(), axes[1].len()) {
            return Err(Error::config(format!(
                "grid values {:?} do not match axes {}x{}",
                values.dim(),
                axes[0].len(),
                axes[1].len()
            )));
        }
        if periodic_axis.is_some_and(|a| a > 1 || axes[a].len() < 2) {
            return Err(Error::config("periodic axis must be 0 or 1 with at least two nodes"));
        }
        Ok(Self {
            names: names.map(str::to_owned),
            axes,
            values: values.as_standard_layout().into_owned(),
            periodic_axis,
        })
    }

    /// Evaluates `f(a, b)` at every node.
    pub fn from_fn(
        names: [&str; 2],
        axes: [Vec<f64>; 2],
        periodic_axis: Option<usize>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values = Array2::from_shape_fn((axes[0].len(), axes[1].len()), |(i, j)| f(axes[0][i], axes[1][j]));
        Self::new(names, axes, values, periodic_axis)
    }

    pub fn names(&self) -> [&str; 2] {
        [&self.names[0], &self.names[1]]
    }

    pub fn axes(&self) -> &[Vec<f64>; 2] {
        &self.axes
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn periodic_axis(&self) -> Option<usize> {
        self.periodic_axis
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Same axes, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        Self::new(self.names(), self.axes.clone(), values, self.periodic_axis)
    }

    /// Node coordinates in row-major order, one `(a, b)` pair per row.
    pub fn points(&self) -> Array2<f64> {
        let (n0, n1) = self.shape();
        Array2::from_shape_fn((n0 * n1, 2), |(k, c)| if c == 0 { self.axes[0][k / n1] } else { self.axes[1][k % n1] })
    }

    /// Values that enter norms, in row-major order.
    pub fn norm_values(&self) -> Vec<f64> {
        let (n0, n1) = self.shape();
        let (m0, m1) = match self.periodic_axis {
            Some(0) => (n0 - 1, n1),
            Some(_) => (n0, n1 - 1),
            None => (n0, n1),
        };
        let mut out = Vec::with_capacity(m0 * m1);
        for i in 0..m0 {
            out.extend(self.values.row(i).iter().take(m1));
        }
        out
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.axes != other.axes || self.periodic_axis != other.periodic_axis {
            return Err(Error::config("fields live on different grids"));
        }
        Ok(())
    }

    /// Node-wise `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let mut values = self.values.clone();
        Zip::from(&mut values).and(&other.values).for_each(|a, &b| *a -= b);
        self.with_values(values)
    }

    /// Writes the grid as text: a header `n0,n1`, then one `a,b,value` row per
    /// node in row-major order, every number with 17 significant digits.
    pub fn write(&self, path: &Path) -> Result<()> {
        let (n0, n1) = self.shape();
        let mut text = String::with_capacity(64 * n0 * n1);
        writeln!(text, "{n0},{n1}").expect("write to string");
        for i in 0..n0 {
            for j in 0..n1 {
                writeln!(
                    text,
                    "{:.16e},{:.16e},{:.16e}",
                    self.axes[0][i], self.axes[1][j], self.values[[i, j]]
                )
                .expect("write to string");
            }
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Reads a grid written by [`GridField::write`] or by an external tool
    /// using the same layout.
    pub fn read(path: &Path, names: [&str; 2], periodic_axis: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, names, periodic_axis)
    }

    pub fn parse(text: &str, names: [&str; 2], periodic_axis: Option<usize>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let sizes = parse_row(header, 2, 0)?;
        let (n0, n1) = (sizes[0] as usize, sizes[1] as usize);
        if sizes[0] != n0 as f64 || sizes[1] != n1 as f64 || n0 == 0 || n1 == 0 {
            return Err(Error::Parse(format!("bad grid header {header:?}")));
        }
        let mut axes = [vec![0.0; n0], vec![0.0; n1]];
        let mut values = Array2::zeros((n0, n1));
        let mut count = 0;
        for (k, line) in lines.enumerate() {
            if k >= n0 * n1 {
                return Err(Error::Parse(format!("more than {} grid rows", n0 * n1)));
            }
            let row = parse_row(line, 3, k + 2)?;
            let (i, j) = (k / n1, k % n1);
            if j == 0 {
                axes[0][i] = row[0];
            }
            if i == 0 {
                axes[1][j] = row[1];
            }
            if row[0] != axes[0][i] || row[1] != axes[1][j] {
                return Err(Error::Parse(format!("row {} is off the tensor grid", k + 2)));
            }
            values[[i, j]] = row[2];
            count += 1;
        }
        if count != n0 * n1 {
            return Err(Error::Parse(format!("expected {} grid rows, found {count}", n0 * n1)));
        }
        Self::new(names, axes, values, periodic_axis)
    }
}

fn parse_row(line: &str, expect: usize, lineno: usize) -> Result<Vec<f64>> {
    let fields: Vec<f64> = line
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
    if fields.len() != expect {
        return Err(Error::Parse(format!("line {lineno}: expected {expect} fields, found {}", fields.len())));
    }
    Ok(fields)
}
