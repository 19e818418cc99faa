//! Checks on computed eigenpairs: the integral representation of `φ'`, the
//! sign structure of `φ'` relative to the level set `c = λ`, the second
//! derivative at critical points of `m`, and sweeps in `s`.

mod identity;
mod nodal;
mod sweep;

use thiserror::Error;

use crate::coefficients::CoefficientError;
use crate::grid::GridError;

pub use identity::{derivative_identity_profile, derivative_identity_residual, MAX_EXPONENT};
pub use nodal::{
    nodal_classify, second_derivative_checks, CriticalPoint, Extremum, NodalClass, NodalReport, SecondDerivativeCheck, Sign,
    SignRun, SIGN_DEAD_BAND,
};
pub use sweep::{log_spaced, sweep, sweep_with_threads, thread_count_from_env, SweepRecord, THREADS_ENV};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("exponent 2s(m(t) - m(x)) = {0:.1} exceeds the overflow guard; reduce s")]
    Overflow(f64),
    #[error("y0 = {y0} is not a critical point of φ (|φ'(y0)| = {dphi:e})")]
    NotCritical { y0: f64, dphi: f64 },
    #[error("y0 = {0} lies outside [-1, 1]")]
    Domain(f64),
    #[error("eigenpair is not converged")]
    NotConverged,
    #[error("nodal classification needs a non-constant c")]
    ConstantPotential,
    #[error("sweep s-values must be finite, non-negative and strictly ascending")]
    InvalidSweep,
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
