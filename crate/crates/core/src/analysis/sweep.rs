use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::ProblemSpec;
use crate::eigensolver::{Eigenpair, SolveStatus};
use crate::grid::Discretization;
use crate::io::float_or_null;
use crate::solve_on;

use super::AnalysisError;

/// Caps sweep parallelism. `1` forces serial execution.
pub const THREADS_ENV: &str = "ADVECTA_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub s: f64,
    #[serde(with = "float_or_null")]
    pub lambda: f64,
    /// `λ - c(x0)`.
    #[serde(with = "float_or_null")]
    pub gap: f64,
    /// `‖φ - 1‖∞`.
    #[serde(with = "float_or_null")]
    pub phi_err: f64,
    /// `‖φ'‖∞`.
    #[serde(with = "float_or_null")]
    pub dphi_norm: f64,
    #[serde(with = "float_or_null")]
    pub kappa: f64,
    pub status: SolveStatus,
}

impl SweepRecord {
    pub fn from_pair(spec: &ProblemSpec, pair: &Eigenpair) -> Self {
        if !pair.is_converged() {
            return Self::failed(spec.s, pair.status);
        }
        Self {
            s: spec.s,
            lambda: pair.lambda,
            gap: pair.lambda - spec.c.value(spec.x0()),
            phi_err: pair.phi_err(),
            dphi_norm: pair.dphi_norm(),
            kappa: pair.kappa,
            status: pair.status,
        }
    }

    pub fn failed(s: f64, status: SolveStatus) -> Self {
        Self {
            s,
            lambda: f64::NAN,
            gap: f64::NAN,
            phi_err: f64::NAN,
            dphi_norm: f64::NAN,
            kappa: f64::NAN,
            status,
        }
    }
}

/// Reads [`THREADS_ENV`]; unset or unparsable means one thread per core.
pub fn thread_count_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// `per_decade` log-spaced points per decade from `min` to `max`, both included.
pub fn log_spaced(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    if min == max {
        return vec![min];
    }
    let (a, b) = (min.log10(), max.log10());
    let count = (((b - a) * per_decade as f64).round() as usize).max(1);
    (0..=count)
        .map(|k| match k {
            0 => min,
            k if k == count => max,
            k => 10f64.powf(a + (b - a) * k as f64 / count as f64),
        })
        .collect()
}

pub fn sweep(template: &ProblemSpec, s_values: &[f64]) -> Result<Vec<SweepRecord>, AnalysisError> {
    sweep_with_threads(template, s_values, thread_count_from_env())
}

/// Solves independently at every `s`; output order follows `s_values`.
/// Per-point failures are recorded inline with NaN metrics.
pub fn sweep_with_threads(
    template: &ProblemSpec,
    s_values: &[f64],
    threads: usize,
) -> Result<Vec<SweepRecord>, AnalysisError> {
    let valid = s_values.iter().all(|s| s.is_finite() && *s >= 0.0)
        && s_values.windows(2).all(|w| w[0] < w[1]);
    if !valid {
        return Err(AnalysisError::InvalidSweep);
    }
    let disc = Arc::new(Discretization::new(template.n)?);
    let point = |s: f64| -> SweepRecord {
        let Ok(spec) = template.with_s(s) else {
            return SweepRecord::failed(s, SolveStatus::Unstable);
        };
        match solve_on(&disc, &spec) {
            Ok(pair) => SweepRecord::from_pair(&spec, &pair),
            Err(_) => SweepRecord::failed(s, SolveStatus::Unstable),
        }
    };
    if threads <= 1 {
        return Ok(s_values.iter().map(|&s| point(s)).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    Ok(pool.install(|| s_values.par_iter().map(|&s| point(s)).collect()))
}
