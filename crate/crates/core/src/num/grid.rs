use crate::error::{Error, Result};
use crate::num::dense::ComplexMatrix;

/// Uniform grid on `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    start: f64,
    end: f64,
    nodes: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Precondition(format!("grid needs at least 2 nodes, got {nodes}")));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::Precondition(format!("grid interval [{start}, {end}] is empty")));
        }
        Ok(Self { start, end, nodes })
    }

    /// Grid on `[0, length]` with the given spacing (rounded to fit).
    pub fn with_spacing(length: f64, spacing: f64) -> Result<Self> {
        let steps = (length / spacing).round().max(1.0) as usize;
        Self::new(0.0, length, steps + 1)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.nodes - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.nodes {
            self.end
        } else {
            self.start + k as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes).map(move |k| self.node(k))
    }

    /// Index of the node within `1e-9` spacings of `x`, if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = (x - self.start) / self.spacing();
        let k = pos.round();
        if (pos - k).abs() <= 1e-9 && k >= 0.0 && (k as usize) < self.nodes {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * self.spacing();
        x >= self.start - tol && x <= self.end + tol
    }

    /// Leading part of the grid ending at node `k`.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.start, self.node(k), k + 1)
    }
}

/// Matrix-valued function of one real variable.
pub trait MatrixFunction: Send + Sync {
    fn eval(&self, x: f64) -> ComplexMatrix;
}

impl<F> MatrixFunction for F
where
    F: Fn(f64) -> ComplexMatrix + Send + Sync,
{
    fn eval(&self, x: f64) -> ComplexMatrix {
        self(x)
    }
}

/// Matrix value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledMatrixFunction {
    grid: Grid,
    values: Vec<ComplexMatrix>,
}

impl SampledMatrixFunction {
    pub fn new(grid: Grid, values: Vec<ComplexMatrix>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.nodes()
            )));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.shape() != first.shape()) {
                return Err(Error::Dimension("sampled values differ in shape".into()));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> ComplexMatrix) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn try_from_fn(grid: Grid, f: impl Fn(f64) -> Result<ComplexMatrix>) -> Result<Self> {
        let values = grid.points().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[ComplexMatrix] {
        &self.values
    }

    pub fn value(&self, k: usize) -> &ComplexMatrix {
        &self.values[k]
    }

    pub fn last(&self) -> &ComplexMatrix {
        self.values.last().expect("grid has at least two nodes")
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values[0].shape()
    }

    pub fn map(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    /// Value at `x`: exact at nodes, cubic Lagrange interpolation between them.
    pub fn at(&self, x: f64) -> ComplexMatrix {
        if let Some(k) = self.grid.index_of(x) {
            return self.values[k].clone();
        }
        let n = self.grid.nodes();
        let h = self.grid.spacing();
        let pos = ((x - self.grid.start()) / h).clamp(0.0, (n - 1) as f64);
        if n < 4 {
            let k = (pos.floor() as usize).min(n - 2);
            let t = pos - k as f64;
            return &self.values[k] * num_complex::Complex64::new(1.0 - t, 0.0)
                + &self.values[k + 1] * num_complex::Complex64::new(t, 0.0);
        }
        let k0 = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut out = ComplexMatrix::zeros(self.values[0].nrows(), self.values[0].ncols());
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (pos - (k0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            out += &self.values[k0 + a] * num_complex::Complex64::new(w, 0.0);
        }
        out
    }
}

impl MatrixFunction for SampledMatrixFunction {
    fn eval(&self, x: f64) -> ComplexMatrix {
        self.at(x)
    }
}
