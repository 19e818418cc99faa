//! Principal eigenpairs of the Neumann problem
//!
//! ```text
//! -φ'' - 2 s m'(x) φ' + c(x) φ = λ φ   on [-1, 1],   φ'(±1) = 0,
//! ```
//!
//! computed by Chebyshev–Gauss–Lobatto collocation, together with checks of
//! the structural properties of `(λ(s), φ_s)` and their behaviour as `s` grows.
//!
//! ```no_run
//! use advecta_core::{solve, Coefficient, ProblemSpec};
//!
//! let spec = ProblemSpec::new(
//!     Coefficient::poly_bump(4).unwrap(),
//!     Coefficient::affine(2.0, 1.0),
//!     1e4,
//!     801,
//! )
//! .unwrap();
//! let pair = solve(&spec).unwrap();
//! println!("lambda - c(0) = {:e}", pair.lambda - 2.0);
//! ```

pub mod analysis;
pub mod assembly;
pub mod coefficients;
pub mod eigensolver;
pub mod grid;
pub mod io;

use std::sync::Arc;

use thiserror::Error;

pub use analysis::{
    derivative_identity_profile, derivative_identity_residual, nodal_classify, second_derivative_checks, sweep,
    sweep_with_threads, AnalysisError, NodalClass, NodalReport, SecondDerivativeCheck, SignRun, SweepRecord,
};
pub use assembly::{assemble, AssemblyError, ProblemSpec, ReducedOperator};
pub use coefficients::{
    classify_hc, transversal_roots, validate_hm, Coefficient, CoefficientError, HcClass, HcReport, HmReport,
};
pub use eigensolver::{condition_number, principal_eigenpair, Eigenpair, SolveStatus, SolverError, SolverOptions};
pub use grid::{CollocationGrid, DiffMatrices, Discretization, GridError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}

/// Builds the discretization for `spec.n`, assembles and solves.
pub fn solve(spec: &ProblemSpec) -> Result<Eigenpair, Error> {
    let disc = Arc::new(Discretization::new(spec.n)?);
    solve_on(&disc, spec)
}

/// Like [`solve`] but reuses an existing discretization of matching order.
pub fn solve_on(disc: &Arc<Discretization>, spec: &ProblemSpec) -> Result<Eigenpair, Error> {
    let op = assemble(spec, disc)?;
    Ok(principal_eigenpair(&op, spec)?)
}
