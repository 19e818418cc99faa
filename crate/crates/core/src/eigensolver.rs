//! Principal eigenpair of a [`ReducedOperator`] by shifted inverse iteration.
//!
//! The initial shift sits strictly below `min c - (max c - min c) - 1`, under
//! the whole real spectrum, so iteration from a positive start vector is drawn
//! to the principal eigenvalue. Once the residual is small the shift jumps to
//! the Rayleigh quotient and the factorization is redone once. The converged
//! pair is then polished by Newton steps with compensated residuals.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{ProblemSpec, ReducedOperator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("eigenvalue is ill-conditioned: |y·x| = {0:e} relative to |x||y|")]
    IllConditioned(f64),
    #[error("shifted operator stayed singular after perturbing the shift")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Iteration converged but positivity or the residual check failed.
    Unstable,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::Unstable => "unstable",
            Self::MaxIterations => "max_iterations",
        })
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "converged" => Ok(Self::Converged),
            "unstable" => Ok(Self::Unstable),
            "max_iterations" => Ok(Self::MaxIterations),
            other => Err(format!("unknown solver status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Sup-norm change between successive normalized iterates.
    pub tolerance: f64,
    /// Relative residual below which the shift moves to the Rayleigh quotient.
    pub rayleigh_switch: f64,
    /// Backward error `‖Av - ρv‖∞ / (‖A‖∞ ‖v‖∞)` accepted as converged once the
    /// iterate has settled. At large `s` the iterates jitter at the rounding
    /// floor and the change never reaches `tolerance`.
    pub backward_tolerance: f64,
    /// Relative eigen-residual above which a converged pair is flagged unstable.
    pub residual_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-13,
            rayleigh_switch: 1e-4,
            backward_tolerance: 1e-14,
            residual_limit: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Nodal values on the full grid, `max φ = 1`.
    pub phi: Vec<f64>,
    /// `d1 · φ`.
    pub dphi: Vec<f64>,
    /// `‖A_full φ - λ φ‖∞` over interior rows, relative to `‖A_full‖∞`.
    pub residual: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl Eigenpair {
    pub fn phi_err(&self) -> f64 {
        self.phi.iter().fold(0.0, |a, p| a.max((p - 1.0).abs()))
    }

    pub fn dphi_norm(&self) -> f64 {
        sup_norm(&self.dphi)
    }

    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

struct ShiftedLu {
    lu: LU<f64, Dyn, Dyn>,
    shift: f64,
}

impl ShiftedLu {
    fn new(a: &DMatrix<f64>, shift: f64) -> Self {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= shift;
        }
        Self { lu: m.lu(), shift }
    }

    /// Solves, nudging the shift off an exact eigenvalue if the factor is singular.
    fn solve(&mut self, a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        for attempt in 0..4 {
            if let Some(x) = self.lu.solve(rhs) {
                if x.iter().all(|v| v.is_finite()) {
                    return Ok(x);
                }
            }
            let bump = 1e-12 * self.shift.abs().max(1.0) * 10f64.powi(attempt);
            *self = Self::new(a, self.shift - bump);
        }
        Err(SolverError::Singular)
    }
}

/// Scales so the entry of largest magnitude is exactly `+1`.
fn normalize_signed(v: &mut DVector<f64>) {
    let k = v.iamax();
    let pivot = v[k];
    if pivot != 0.0 {
        *v /= pivot;
    }
}

/// Change below which the backward-error test is consulted.
const SETTLED_CHANGE: f64 = 1e-8;

struct Iterate {
    vector: DVector<f64>,
    rho: f64,
    iterations: usize,
    converged: bool,
}

fn inverse_iteration(
    a: &DMatrix<f64>,
    shift: f64,
    allow_rayleigh: bool,
    opts: &SolverOptions,
) -> Result<Iterate, SolverError> {
    let n = a.nrows();
    let mut factor = ShiftedLu::new(a, shift);
    let mut v = DVector::from_element(n, 1.0);
    let mut shifted = !allow_rayleigh;
    let mut rho = shift;
    let a_norm = a.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    for it in 1..=opts.max_iterations {
        let mut w = factor.solve(a, &v)?;
        // (A - σ) w = v, so λ ≈ σ + v_j / w_j at the dominant entry. This is far
        // less sensitive to rounding in A·v than the Rayleigh quotient.
        let j = w.iamax();
        rho = factor.shift + v[j] / w[j];
        normalize_signed(&mut w);
        let change = (&w - &v).amax();
        v = w;
        if !shifted {
            let av = a * &v;
            let rq = v.dot(&av) / v.dot(&v);
            let res = (&av - &v * rq).amax();
            if res <= opts.rayleigh_switch * rq.abs().max(1.0) {
                factor = ShiftedLu::new(a, rq);
                shifted = true;
                continue;
            }
        }
        let settled = shifted && change < SETTLED_CHANGE && {
            let backward = (a * &v - &v * rho).amax() / (a_norm * v.amax());
            backward <= opts.backward_tolerance
        };
        if change < opts.tolerance || settled {
            return Ok(Iterate { vector: v, rho, iterations: it, converged: true });
        }
    }
    Ok(Iterate {
        vector: v,
        rho,
        iterations: opts.max_iterations,
        converged: false,
    })
}

/// `Σ a_i b_i` with error-free products and sums, accurate to a few ulps of
/// the result even when the terms cancel by many orders of magnitude.
fn dot2<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    let (mut sum, mut err) = (0.0f64, 0.0f64);
    for (x, y) in a.zip(b) {
        let p = x * y;
        let pe = x.mul_add(*y, -p);
        let t = sum + p;
        let z = t - sum;
        err += (sum - (t - z)) + (p - z) + pe;
        sum = t;
    }
    sum + err
}

/// `A v - ρ v` with compensated row sums. Plain summation loses everything
/// here: row entries reach `N⁴` while the residual sought is `O(1)·ε`.
fn accurate_residual(a: &DMatrix<f64>, v: &DVector<f64>, rho: f64) -> DVector<f64> {
    let mut r = DVector::zeros(v.len());
    let neg = -rho;
    for i in 0..v.len() {
        let row = a.row(i);
        let t = row.iter().chain(std::iter::once(&neg));
        r[i] = dot2(t, v.iter().chain(std::iter::once(&v[i])));
    }
    r
}

/// Newton refinement of a converged pair on `(A - ρ) v = 0, v_k = 1`.
///
/// The bordered Jacobian is `A - ρ` with column `k` replaced by `-v`; it is
/// factored once and reused. Inverse iteration alone stalls at the forward
/// error of the shifted solve, about `ε‖A‖/gap`, which at `N = 801` is far
/// above the eigenvalue accuracy the residual supports.
fn refine(a: &DMatrix<f64>, v: &DVector<f64>, rho: f64) -> (DVector<f64>, f64) {
    let k = v.iamax();
    let mut v = v / v[k];
    let mut rho = rho;
    let mut jac = a.clone();
    for i in 0..jac.nrows() {
        jac[(i, i)] -= rho;
    }
    jac.set_column(k, &(-&v));
    let lu = jac.lu();
    let mut r = accurate_residual(a, &v, rho);
    for _ in 0..REFINE_STEPS {
        let Some(z) = lu.solve(&(-&r)) else { break };
        if !z.iter().all(|x| x.is_finite()) {
            break;
        }
        let mut cand = &v + &z;
        cand[k] = 1.0;
        let cand_rho = rho + z[k];
        let cand_r = accurate_residual(a, &cand, cand_rho);
        if cand_r.amax() >= r.amax() {
            break;
        }
        let small = z.amax() <= 4.0 * f64::EPSILON * (1.0 + rho.abs());
        (v, rho, r) = (cand, cand_rho, cand_r);
        if small {
            break;
        }
    }
    normalize_signed(&mut v);
    (v, rho)
}

/// Newton steps after inverse iteration; one normally suffices.
const REFINE_STEPS: usize = 3;

fn initial_shift(op: &ReducedOperator, spec: &ProblemSpec) -> f64 {
    let c = spec.c.sample(op.disc.grid.nodes());
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo - (hi - lo) - 1.0
}

/// Assembles the public pair from an interior eigenvector estimate.
fn finish(
    op: &ReducedOperator,
    interior: &DVector<f64>,
    lambda: f64,
    iterations: usize,
    converged: bool,
    opts: &SolverOptions,
) -> Eigenpair {
    let mut phi = op
        .reconstruct_full(interior.as_slice())
        .expect("iterate has interior length");
    let k = (0..phi.len())
        .max_by(|&i, &j| phi[i].abs().total_cmp(&phi[j].abs()))
        .unwrap_or(0);
    let pivot = phi[k];
    if pivot != 0.0 {
        phi.iter_mut().for_each(|p| *p /= pivot);
    }
    let dphi = op.disc.differentiate(&phi);

    let full = &op.full_rows;
    let a_norm = (0..full.nrows())
        .map(|r| full.row(r).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let residual = (0..full.nrows())
        .map(|r| {
            let row: f64 = full.row(r).iter().zip(&phi).map(|(a, p)| a * p).sum();
            (row - lambda * phi[r + 1]).abs()
        })
        .fold(0.0, f64::max)
        / a_norm.max(f64::MIN_POSITIVE);

    let positive = phi.iter().all(|p| *p > 0.0);
    let status = if !converged {
        SolveStatus::MaxIterations
    } else if positive && residual <= opts.residual_limit {
        SolveStatus::Converged
    } else {
        SolveStatus::Unstable
    };
    Eigenpair {
        lambda,
        phi,
        dphi,
        residual,
        kappa: f64::NAN,
        iterations,
        status,
    }
}

/// Candidates from the full spectrum, lowest real part first; each is polished
/// by inverse iteration and the first with a positive eigenvector wins.
fn dense_fallback(op: &ReducedOperator, opts: &SolverOptions) -> Result<Option<Eigenpair>, SolverError> {
    let scale = op.a_int.amax().max(1.0);
    let mut candidates: Vec<f64> = op
        .a_int
        .clone()
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * scale)
        .map(|z| z.re)
        .collect();
    candidates.sort_by(f64::total_cmp);
    let polish = SolverOptions { max_iterations: 50, ..*opts };
    for cand in candidates.into_iter().take(16) {
        let it = inverse_iteration(&op.a_int, cand, false, &polish)?;
        let (vector, rho) = refine(&op.a_int, &it.vector, it.rho);
        let pair = finish(op, &vector, rho, it.iterations, true, opts);
        if pair.phi.iter().all(|p| *p > 0.0) {
            return Ok(Some(pair));
        }
    }
    Ok(None)
}

pub fn principal_eigenpair(op: &ReducedOperator, spec: &ProblemSpec) -> Result<Eigenpair, SolverError> {
    principal_eigenpair_with(op, spec, &SolverOptions::default())
}

pub fn principal_eigenpair_with(
    op: &ReducedOperator,
    spec: &ProblemSpec,
    opts: &SolverOptions,
) -> Result<Eigenpair, SolverError> {
    let it = inverse_iteration(&op.a_int, initial_shift(op, spec), true, opts)?;
    let (vector, rho) = if it.converged { refine(&op.a_int, &it.vector, it.rho) } else { (it.vector, it.rho) };
    let mut pair = finish(op, &vector, rho, it.iterations, it.converged, opts);
    let positive = pair.phi.iter().all(|p| *p > 0.0);
    if !it.converged || !positive {
        if let Some(mut alt) = dense_fallback(op, opts)? {
            alt.iterations += it.iterations;
            pair = alt;
        }
    }
    if pair.status != SolveStatus::MaxIterations {
        match condition_number_with(op, &pair, opts) {
            Ok(kappa) => pair.kappa = kappa,
            Err(SolverError::IllConditioned(_)) => {
                pair.kappa = f64::INFINITY;
                pair.status = SolveStatus::Unstable;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(pair)
}

/// `κ(λ) = ‖x‖₂‖y‖₂ / |y·x|` for the right and left eigenvectors of the
/// reduced operator. The left vector comes from inverse iteration on the
/// transpose shifted by the converged `λ`.
pub fn condition_number(op: &ReducedOperator, pair: &Eigenpair) -> Result<f64, SolverError> {
    condition_number_with(op, pair, &SolverOptions::default())
}

fn condition_number_with(op: &ReducedOperator, pair: &Eigenpair, opts: &SolverOptions) -> Result<f64, SolverError> {
    let n = op.interior_len();
    let x = DVector::from_column_slice(&pair.phi[1..=n]);
    let at = op.a_int.transpose();
    let left = inverse_iteration(&at, pair.lambda, false, opts)?;
    let y = left.vector;
    let (nx, ny) = (x.norm(), y.norm());
    let overlap = y.dot(&x).abs();
    if overlap < 1e-14 * nx * ny {
        return Err(SolverError::IllConditioned(overlap / (nx * ny)));
    }
    Ok(nx * ny / overlap)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::assembly::assemble;
    use crate::coefficients::Coefficient;
    use crate::grid::Discretization;

    #[test]
    fn compensated_dot_survives_cancellation() {
        let a = [1e16, 1.0, -1e16, 3.0];
        let b = [1.0, 1.0, 1.0, 1.0 / 3.0];
        assert_eq!(dot2(a.iter(), b.iter()), 2.0);
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn refinement_recovers_constant_mode() {
        let m = Coefficient::poly_bump(4).unwrap();
        let spec = ProblemSpec::new(m, Coefficient::constant(2.0), 1e4, 201).unwrap();
        let op = assemble(&spec, &Arc::new(Discretization::new(201).unwrap())).unwrap();
        let n = op.interior_len();
        let rough = DVector::from_fn(n, |i, _| 1.0 + 1e-7 * (i as f64).sin());
        let (v, rho) = refine(&op.a_int, &rough, 2.0 + 1e-6);
        assert!((rho - 2.0).abs() <= 1e-11, "{rho}");
        assert!(v.iter().all(|x| (x - 1.0).abs() <= 1e-11));
    }

    fn run(m: Coefficient, c: Coefficient, s: f64, n: usize) -> Eigenpair {
        let disc = Arc::new(Discretization::new(n).unwrap());
        let spec = ProblemSpec::new(m, c, s, n).unwrap();
        let op = assemble(&spec, &disc).unwrap();
        principal_eigenpair(&op, &spec).unwrap()
    }

    #[test]
    fn constant_potential_gives_flat_eigenfunction() {
        for (s, n) in [(0.0, 8), (7.0, 64), (1e4, 64)] {
            let p = run(Coefficient::poly_bump(4).unwrap(), Coefficient::constant(2.0), s, n);
            assert_eq!(p.status, SolveStatus::Converged);
            assert!((p.lambda - 2.0).abs() <= 1e-9, "{}", p.lambda);
            assert!(p.phi_err() <= 1e-9);
        }
    }

    #[test]
    fn kappa_of_flat_mode_matches_weights() {
        // x = 1 and y is proportional to the interior quadrature weights.
        let n = 32;
        let p = run(Coefficient::poly_bump(4).unwrap(), Coefficient::constant(-3.0), 0.0, n);
        assert!(p.kappa >= 1.0);
        let grid = crate::grid::CollocationGrid::new(n).unwrap();
        let w = &grid.cc_weights()[1..n];
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let expected = ((n - 1) as f64).sqrt() * norm / w.iter().sum::<f64>();
        assert!((p.kappa - expected).abs() <= 1e-2 * expected, "{} vs {expected}", p.kappa);
    }

    #[test]
    fn pair_invariants_hold() {
        let p = run(
            Coefficient::poly_bump(4).unwrap(),
            Coefficient::affine(2.0, 1.0),
            100.0,
            64,
        );
        assert!(p.is_converged());
        assert!(p.lambda > 1.0 && p.lambda < 3.0);
        assert_eq!(p.phi.iter().cloned().fold(f64::MIN, f64::max), 1.0);
        assert!(p.phi.iter().all(|v| *v > 0.0));
        assert!(p.dphi[0].abs() <= 1e-8 && p.dphi[64].abs() <= 1e-8);
        assert!(p.kappa >= 1.0 - 1e-12);
        assert!(p.residual <= 1e-7);
    }

    #[test]
    fn fallback_agrees_with_iteration() {
        let disc = Arc::new(Discretization::new(24).unwrap());
        let spec = ProblemSpec::new(
            Coefficient::poly_bump(4).unwrap(),
            Coefficient::cosine_well(40.0, 2.0, 1.0 / 3.0),
            3.0,
            24,
        )
        .unwrap();
        let op = assemble(&spec, &disc).unwrap();
        let direct = principal_eigenpair(&op, &spec).unwrap();
        let dense = dense_fallback(&op, &SolverOptions::default()).unwrap().unwrap();
        assert!((direct.lambda - dense.lambda).abs() <= 1e-9 * direct.lambda.abs());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let disc = Arc::new(Discretization::new(16).unwrap());
        let spec = ProblemSpec::new(
            Coefficient::poly_bump(4).unwrap(),
            Coefficient::cosine_well(40.0, 2.0, 1.0 / 3.0),
            1.0,
            16,
        )
        .unwrap();
        let op = assemble(&spec, &disc).unwrap();
        let opts = SolverOptions { max_iterations: 1, ..Default::default() };
        let it = inverse_iteration(&op.a_int, initial_shift(&op, &spec), true, &opts).unwrap();
        assert!(!it.converged);
        let pair = finish(&op, &it.vector, it.rho, it.iterations, it.converged, &opts);
        assert_eq!(pair.status, SolveStatus::MaxIterations);
        assert_eq!(pair.phi.len(), 17);
    }
}
