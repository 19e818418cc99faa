//! Chebyshev–Gauss–Lobatto grids, collocation differentiation matrices and
//! Clenshaw–Curtis quadrature on `[-1, 1]`.
//!
//! Nodes are stored in descending order, `nodes[0] = 1` and `nodes[n] = -1`.
//! Every other module indexes nodal vectors the same way.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid collocation order {0}: need at least 2")]
    InvalidOrder(usize),
    #[error("dimension mismatch: expected {expected} samples, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// CGL nodes `cos(iπ/N)`, `i = 0..=N`, with their Clenshaw–Curtis weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationGrid {
    order: usize,
    nodes: Vec<f64>,
    cc_weights: Vec<f64>,
}

impl CollocationGrid {
    pub fn new(order: usize) -> Result<Self, GridError> {
        if order < 2 {
            return Err(GridError::InvalidOrder(order));
        }
        let n = order as f64;
        // sin((N - 2i)π / 2N) == cos(iπ/N), but is exactly odd-symmetric in i.
        let nodes = (0..=order)
            .map(|i| (PI * (n - 2.0 * i as f64) / (2.0 * n)).sin())
            .collect();
        Ok(Self {
            order,
            nodes,
            cc_weights: clenshaw_curtis_weights(order),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cc_weights(&self) -> &[f64] {
        &self.cc_weights
    }

    /// Clenshaw–Curtis approximation of `∫_{-1}^{1} f` from nodal samples.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64, GridError> {
        self.check_len(samples)?;
        Ok(self
            .cc_weights
            .iter()
            .zip(samples)
            .map(|(w, f)| w * f)
            .sum())
    }

    /// Evaluates the degree-N interpolant of `samples` at `x` (barycentric
    /// formula of the second kind).
    pub fn interpolate(&self, samples: &[f64], x: f64) -> Result<f64, GridError> {
        self.check_len(samples)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &fj)) in self.nodes.iter().zip(samples).enumerate() {
            let diff = x - xj;
            if diff == 0.0 {
                return Ok(fj);
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == self.order {
                w *= 0.5;
            }
            let t = w / diff;
            num += t * fj;
            den += t;
        }
        Ok(num / den)
    }

    fn check_len(&self, samples: &[f64]) -> Result<(), GridError> {
        if samples.len() != self.len() {
            return Err(GridError::Dimension {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(())
    }
}

/// Explicit cosine-sum construction, O(N²).
fn clenshaw_curtis_weights(order: usize) -> Vec<f64> {
    let n = order as f64;
    let mut w = vec![0.0; order + 1];
    let end = if order.is_multiple_of(2) {
        1.0 / (n * n - 1.0)
    } else {
        1.0 / (n * n)
    };
    w[0] = end;
    w[order] = end;
    for (i, wi) in w.iter_mut().enumerate().take(order).skip(1) {
        let theta = PI * i as f64 / n;
        let mut v = 1.0;
        if order.is_multiple_of(2) {
            for k in 1..order / 2 {
                let k = k as f64;
                v -= 2.0 * (2.0 * k * theta).cos() / (4.0 * k * k - 1.0);
            }
            v -= (n * theta).cos() / (n * n - 1.0);
        } else {
            for k in 1..=(order - 1) / 2 {
                let k = k as f64;
                v -= 2.0 * (2.0 * k * theta).cos() / (4.0 * k * k - 1.0);
            }
        }
        *wi = 2.0 * v / n;
    }
    w
}

/// First and second derivative collocation matrices on a CGL grid.
#[derive(Debug, Clone)]
pub struct DiffMatrices {
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

impl DiffMatrices {
    pub fn new(grid: &CollocationGrid) -> Self {
        let d1 = first_derivative_matrix(grid);
        let d2 = &d1 * &d1;
        Self { d1, d2 }
    }
}

/// The CGL first-derivative matrix alone.
pub fn first_derivative_matrix(grid: &CollocationGrid) -> DMatrix<f64> {
    let order = grid.order();
    let size = grid.len();
    let n = order as f64;
    let c = |i: usize| -> f64 {
        let end = if i == 0 || i == order { 2.0 } else { 1.0 };
        if i.is_multiple_of(2) {
            end
        } else {
            -end
        }
    };
    let mut d1 = DMatrix::zeros(size, size);
    for i in 0..size {
        let mut row_sum = 0.0;
        for j in 0..size {
            if i == j {
                continue;
            }
            // x_i - x_j via the product formula avoids cancellation near the ends.
            let (fi, fj) = (i as f64, j as f64);
            let diff = -2.0 * (PI * (fi + fj) / (2.0 * n)).sin() * (PI * (fi - fj) / (2.0 * n)).sin();
            let entry = c(i) / (c(j) * diff);
            d1[(i, j)] = entry;
            row_sum += entry;
        }
        // negative sum trick
        d1[(i, i)] = -row_sum;
    }
    d1
}

/// Grid plus differentiation matrices for one order, shared across solves.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: CollocationGrid,
    pub dm: DiffMatrices,
}

impl Discretization {
    pub fn new(order: usize) -> Result<Self, GridError> {
        let grid = CollocationGrid::new(order)?;
        let dm = DiffMatrices::new(&grid);
        Ok(Self { grid, dm })
    }

    pub fn order(&self) -> usize {
        self.grid.order()
    }

    /// `d1 · v` for a full nodal vector.
    pub fn differentiate(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.dm.d1, v)
    }

    /// `d2 · v` for a full nodal vector.
    pub fn differentiate2(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.dm.d2, v)
    }
}

pub(crate) fn mat_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), v.len());
    (0..a.nrows())
        .map(|i| a.row(i).iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}
