//! Collocation of `-φ'' - 2 s m'(x) φ' + c(x) φ` on a CGL grid with the
//! Neumann conditions eliminated.
//!
//! The two boundary rows `d1[0,:]·φ = 0` and `d1[N,:]·φ = 0` are solved for
//! `(φ(1), φ(-1))` in terms of the interior values and substituted into the
//! interior rows, which leaves a standard `(N-1)×(N-1)` eigenproblem.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::coefficients::{validate_hm, Coefficient, HmReport};
use crate::grid::Discretization;

/// Scan resolution used when a [`ProblemSpec`] validates its `m`.
pub const HM_SAMPLES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("m violates the interior-maximum hypothesis: {0}")]
    Hypothesis(String),
    #[error("collocation order {0} too small: need N >= 4")]
    Order(usize),
    #[error("advection strength s = {0} must be finite and non-negative")]
    Strength(f64),
    #[error("grid order {grid} does not match problem order {spec}")]
    OrderMismatch { grid: usize, spec: usize },
    #[error("boundary system is singular (|det| = {0:e})")]
    SingularBoundary(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// One instance of the eigenproblem: coefficients, advection strength and
/// collocation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub m: Coefficient,
    pub c: Coefficient,
    pub s: f64,
    pub n: usize,
    hm: HmReport,
}

impl ProblemSpec {
    pub fn new(m: Coefficient, c: Coefficient, s: f64, n: usize) -> Result<Self, AssemblyError> {
        if n < 4 {
            return Err(AssemblyError::Order(n));
        }
        if !s.is_finite() || s < 0.0 {
            return Err(AssemblyError::Strength(s));
        }
        let hm = validate_hm(&m, HM_SAMPLES);
        if !hm.hm_ok {
            return Err(AssemblyError::Hypothesis(hm.diagnostics.join("; ")));
        }
        Ok(Self { m, c, s, n, hm })
    }

    /// Same coefficients and order at a different `s`.
    pub fn with_s(&self, s: f64) -> Result<Self, AssemblyError> {
        if !s.is_finite() || s < 0.0 {
            return Err(AssemblyError::Strength(s));
        }
        Ok(Self { s, ..self.clone() })
    }

    pub fn with_c(&self, c: Coefficient) -> Self {
        Self { c, ..self.clone() }
    }

    pub fn hm_report(&self) -> &HmReport {
        &self.hm
    }

    /// The interior maximizer of `m`.
    pub fn x0(&self) -> f64 {
        self.hm.x0
    }
}

#[derive(Debug, Clone)]
pub struct ReducedOperator {
    /// Operator on interior nodal values, `(N-1)×(N-1)`.
    pub a_int: DMatrix<f64>,
    /// `2×(N-1)`: row 0 gives `φ(1)`, row 1 gives `φ(-1)`.
    pub boundary_map: DMatrix<f64>,
    /// Interior rows of the un-eliminated operator, `(N-1)×(N+1)`.
    pub full_rows: DMatrix<f64>,
    pub disc: Arc<Discretization>,
}

/// Compensated summation; the row terms here cancel to many digits.
fn neumaier_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let next = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - next) + t } else { (t - next) + sum };
        sum = next;
    }
    sum + comp
}

pub fn assemble(spec: &ProblemSpec, disc: &Arc<Discretization>) -> Result<ReducedOperator, AssemblyError> {
    let order = disc.order();
    if order != spec.n {
        return Err(AssemblyError::OrderMismatch { grid: order, spec: spec.n });
    }
    let size = order + 1;
    let interior = order - 1;
    let x = disc.grid.nodes();
    let (d1, d2) = (&disc.dm.d1, &disc.dm.d2);

    let mut full_rows = DMatrix::zeros(interior, size);
    for r in 0..interior {
        let i = r + 1;
        let drift = -2.0 * spec.s * spec.m.derivative(x[i]);
        for j in 0..size {
            full_rows[(r, j)] = -d2[(i, j)] + drift * d1[(i, j)];
        }
        full_rows[(r, i)] += spec.c.value(x[i]);
    }

    let (b00, b01, b10, b11) = (d1[(0, 0)], d1[(0, order)], d1[(order, 0)], d1[(order, order)]);
    let det = b00 * b11 - b01 * b10;
    let scale = b00.abs().max(b01.abs()).max(b10.abs()).max(b11.abs());
    if det.abs() < 1e-13 * scale * scale {
        return Err(AssemblyError::SingularBoundary(det.abs()));
    }
    let mut boundary_map = DMatrix::zeros(2, interior);
    for r in 0..interior {
        let (c0, c1) = (d1[(0, r + 1)], d1[(order, r + 1)]);
        // [b00 b01; b10 b11] (φ_0, φ_N) = -(c0, c1)
        boundary_map[(0, r)] = -(b11 * c0 - b01 * c1) / det;
        boundary_map[(1, r)] = -(-b10 * c0 + b00 * c1) / det;
    }

    let mut a_int = full_rows.columns(1, interior).into_owned();
    for r in 0..interior {
        let (f0, f1) = (full_rows[(r, 0)], full_rows[(r, order)]);
        for q in 0..interior {
            a_int[(r, q)] += f0 * boundary_map[(0, q)] + f1 * boundary_map[(1, q)];
        }
    }
    // Constants satisfy the Neumann condition and the operator sends them to
    // c, so each row must sum to c(x_i). Rounding in D1·D1 and the elimination
    // breaks this by far more than the eigenvalue tolerance at large s, so the
    // diagonal is rebuilt from the off-diagonal sum (negative-sum trick).
    for r in 0..interior {
        let off = neumaier_sum((0..interior).filter(|&q| q != r).map(|q| a_int[(r, q)]));
        a_int[(r, r)] = spec.c.value(x[r + 1]) - off;
    }

    Ok(ReducedOperator {
        a_int,
        boundary_map,
        full_rows,
        disc: Arc::clone(disc),
    })
}

impl ReducedOperator {
    pub fn interior_len(&self) -> usize {
        self.a_int.nrows()
    }

    /// Full nodal vector from interior values, boundary values chosen so the
    /// discrete Neumann conditions hold.
    pub fn reconstruct_full(&self, interior: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        let n_int = self.interior_len();
        if interior.len() != n_int {
            return Err(AssemblyError::Dimension { expected: n_int, got: interior.len() });
        }
        let dot = |row: usize| -> f64 {
            self.boundary_map.row(row).iter().zip(interior).map(|(a, b)| a * b).sum()
        };
        let mut full = Vec::with_capacity(n_int + 2);
        full.push(dot(0));
        full.extend_from_slice(interior);
        full.push(dot(1));
        Ok(full)
    }

    /// Inverse of [`Self::reconstruct_full`] on its range.
    pub fn restrict_interior(&self, full: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        let n_int = self.interior_len();
        if full.len() != n_int + 2 {
            return Err(AssemblyError::Dimension { expected: n_int + 2, got: full.len() });
        }
        Ok(full[1..=n_int].to_vec())
    }
}
