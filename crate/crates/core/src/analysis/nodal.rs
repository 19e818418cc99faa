//! Sign structure of `φ'` against the transversal roots of `c - λ`, and the
//! second-derivative identity at critical points of `m`.

use serde::{Deserialize, Serialize};

use crate::assembly::ProblemSpec;
use crate::coefficients::transversal_roots;
use crate::eigensolver::Eigenpair;
use crate::grid::{first_derivative_matrix, mat_vec, CollocationGrid};

use super::AnalysisError;

/// Entries of `φ'` below this fraction of `‖φ'‖∞` count as zero.
pub const SIGN_DEAD_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "0")]
    Zero,
}

/// Collapsed signs of `φ'` at the nodes strictly inside one interval between
/// consecutive points of `{-1} ∪ T_s ∪ {1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRun {
    pub lo: f64,
    pub hi: f64,
    /// `c > λ` on the interval.
    pub c_above_lambda: bool,
    pub signs: Vec<Sign>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: f64,
    pub kind: Extremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "critical_points", rename_all = "snake_case")]
pub enum NodalClass {
    Decreasing,
    Increasing,
    SingleInteriorMax,
    SingleInteriorMin,
    Alternating(usize),
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    pub lambda: f64,
    /// Transversal roots of `c - λ`, ascending.
    pub t_roots: Vec<f64>,
    pub q_s: usize,
    pub sign_pattern: Vec<SignRun>,
    /// Interior zeros of `φ'`, ascending.
    pub critical_points: Vec<CriticalPoint>,
    pub classification: NodalClass,
    pub consistent: bool,
    pub diagnostics: Vec<String>,
}

fn bisect_interpolant(grid: &CollocationGrid, values: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| grid.interpolate(values, x).expect("full nodal vector");
    let flo_pos = f(lo) > 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == flo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn collapse(signs: impl IntoIterator<Item = Sign>) -> Vec<Sign> {
    let mut out: Vec<Sign> = Vec::new();
    for s in signs {
        if s != Sign::Zero && out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

/// Sign pattern of `φ'`, its interior critical points, and whether every
/// applicable clause of the sign theorem for `φ'` holds:
///
/// * on `(-1, x_{t,1}]`, `φ' < 0` where `c < λ` and `φ' > 0` where `c > λ`;
/// * on `[x_{t,q}, 1)`, `φ' < 0` where `c > λ` and `φ' > 0` where `c < λ`;
/// * between consecutive roots, at most one critical point, a maximum where
///   `c < λ` and a minimum where `c > λ`.
pub fn nodal_classify(spec: &ProblemSpec, pair: &Eigenpair) -> Result<NodalReport, AnalysisError> {
    if !pair.is_converged() {
        return Err(AnalysisError::NotConverged);
    }
    if spec.c.is_constant() {
        return Err(AnalysisError::ConstantPotential);
    }
    let grid = CollocationGrid::new(spec.n)?;
    let lambda = pair.lambda;
    let t_roots = transversal_roots(&spec.c, lambda)?;
    let q_s = t_roots.len();

    let band = SIGN_DEAD_BAND * pair.dphi_norm();
    let sign_of = |d: f64| {
        if d > band {
            Sign::Plus
        } else if d < -band {
            Sign::Minus
        } else {
            Sign::Zero
        }
    };
    // interior nodes in ascending x
    let nodes = grid.nodes();
    let interior: Vec<(f64, f64)> = (1..spec.n).rev().map(|i| (nodes[i], pair.dphi[i])).collect();

    let mut breaks = Vec::with_capacity(q_s + 2);
    breaks.push(-1.0);
    breaks.extend_from_slice(&t_roots);
    breaks.push(1.0);
    let c_above = |lo: f64, hi: f64| spec.c.value(0.5 * (lo + hi)) > lambda;
    let sign_pattern: Vec<SignRun> = breaks
        .windows(2)
        .map(|w| {
            let signs: Vec<Sign> = interior
                .iter()
                .filter(|(x, _)| *x > w[0] && *x < w[1])
                .map(|(_, d)| sign_of(*d))
                .collect();
            let mut collapsed = collapse(signs.iter().copied());
            if collapsed.is_empty() && !signs.is_empty() {
                collapsed.push(Sign::Zero);
            }
            SignRun {
                lo: w[0],
                hi: w[1],
                c_above_lambda: c_above(w[0], w[1]),
                signs: collapsed,
            }
        })
        .collect();

    let mut critical_points = Vec::new();
    let mut prev: Option<(f64, Sign)> = None;
    for &(x, d) in &interior {
        let s = sign_of(d);
        if s == Sign::Zero {
            continue;
        }
        if let Some((xp, sp)) = prev {
            if sp != s {
                let kind = if sp == Sign::Plus { Extremum::Max } else { Extremum::Min };
                let x_star = bisect_interpolant(&grid, &pair.dphi, xp, x);
                critical_points.push(CriticalPoint { x: x_star, kind });
            }
        }
        prev = Some((x, s));
    }

    let overall = collapse(interior.iter().map(|(_, d)| sign_of(*d)));
    let classification = match overall.as_slice() {
        [] => NodalClass::Flat,
        [Sign::Minus] => NodalClass::Decreasing,
        [Sign::Plus] => NodalClass::Increasing,
        [Sign::Plus, Sign::Minus] => NodalClass::SingleInteriorMax,
        [Sign::Minus, Sign::Plus] => NodalClass::SingleInteriorMin,
        _ => NodalClass::Alternating(critical_points.len()),
    };

    let mut diagnostics = Vec::new();
    if q_s == 0 {
        diagnostics.push("c - lambda has no transversal root".to_string());
    } else {
        let first_expected = if sign_pattern[0].c_above_lambda { Sign::Plus } else { Sign::Minus };
        let last_expected = if sign_pattern[q_s].c_above_lambda { Sign::Minus } else { Sign::Plus };
        let (r_first, r_last) = (t_roots[0], t_roots[q_s - 1]);
        for &(x, d) in &interior {
            let s = sign_of(d);
            if s == Sign::Zero {
                continue;
            }
            if x <= r_first && s != first_expected {
                diagnostics.push(format!("phi' has sign {s:?} at x = {x:.6} left of the first root"));
            }
            if x >= r_last && s != last_expected {
                diagnostics.push(format!("phi' has sign {s:?} at x = {x:.6} right of the last root"));
            }
        }
        for run in &sign_pattern[1..q_s] {
            let allowed: &[Sign] = if run.c_above_lambda {
                &[Sign::Minus, Sign::Plus]
            } else {
                &[Sign::Plus, Sign::Minus]
            };
            let signs: Vec<Sign> = run.signs.iter().copied().filter(|s| *s != Sign::Zero).collect();
            let fits = match signs.as_slice() {
                [] => true,
                [a] => allowed.contains(a),
                [a, b] => [*a, *b] == allowed,
                _ => false,
            };
            if !fits {
                diagnostics.push(format!(
                    "sign sequence {:?} on ({:.6}, {:.6}) violates the single-extremum rule",
                    run.signs, run.lo, run.hi
                ));
            }
        }
    }

    Ok(NodalReport {
        lambda,
        t_roots,
        q_s,
        sign_pattern,
        critical_points,
        classification,
        consistent: diagnostics.is_empty(),
        diagnostics,
    })
}

/// `-φ''(x_c)` against `(λ - c(x_c)) φ(x_c)` at a critical point `x_c` of `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivativeCheck {
    pub x_c: f64,
    pub measured: f64,
    pub predicted: f64,
    /// `x_c` is the maximizer of `m`.
    pub is_x0: bool,
}

impl SecondDerivativeCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.measured - self.predicted).abs()
    }

    pub fn agrees(&self, abs_tol: f64, rel_tol: f64) -> bool {
        self.discrepancy() <= abs_tol.max(rel_tol * self.predicted.abs())
    }
}

/// Since `m'(x_c) = 0`, the equation reduces to `-φ''(x_c) = (λ - c(x_c)) φ(x_c)`
/// at every critical point of `m`. Off-grid points use barycentric interpolation.
pub fn second_derivative_checks(
    spec: &ProblemSpec,
    pair: &Eigenpair,
) -> Result<Vec<SecondDerivativeCheck>, AnalysisError> {
    let grid = CollocationGrid::new(spec.n)?;
    let d1 = first_derivative_matrix(&grid);
    let d2phi = mat_vec(&d1, &pair.dphi);
    let x0 = spec.x0();
    spec.hm_report()
        .critical_points
        .iter()
        .map(|&x_c| {
            let measured = -grid.interpolate(&d2phi, x_c)?;
            let phi_c = grid.interpolate(&pair.phi, x_c)?;
            Ok(SecondDerivativeCheck {
                x_c,
                measured,
                predicted: (pair.lambda - spec.c.value(x_c)) * phi_c,
                is_x0: x_c == x0,
            })
        })
        .collect()
}
