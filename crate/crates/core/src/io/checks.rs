use serde::{Deserialize, Serialize};

use crate::analysis::{
    derivative_identity_profile, nodal_classify, second_derivative_checks, AnalysisError, NodalReport,
};
use crate::assembly::ProblemSpec;
use crate::coefficients::classify_hc;
use crate::eigensolver::Eigenpair;

use super::{float_or_null, CheckKind};

/// Largest `s` at which the integral representation is evaluated.
pub const IDENTITY_MAX_S: f64 = 50.0;
pub const IDENTITY_TOL: f64 = 1e-6;
const HC_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub s: f64,
    pub check: CheckKind,
    pub status: CheckStatus,
    /// The quantity the check thresholds on.
    #[serde(with = "float_or_null")]
    pub value: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(spec: &ProblemSpec, check: CheckKind, status: CheckStatus, value: f64, detail: String) -> Self {
        Self {
            s: spec.s,
            check,
            status,
            value,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

fn pass_if(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

fn containment(spec: &ProblemSpec, pair: &Eigenpair) -> CheckOutcome {
    let lambda = pair.lambda;
    if spec.c.is_constant() {
        let c = spec.c.value(0.0);
        let dev = (lambda - c).abs();
        return CheckOutcome::new(
            spec,
            CheckKind::Containment,
            pass_if(dev <= 1e-9),
            lambda,
            format!("constant c = {c}, |lambda - c| = {dev:e}"),
        );
    }
    let hc = classify_hc(&spec.c, HC_SAMPLES);
    CheckOutcome::new(
        spec,
        CheckKind::Containment,
        pass_if(hc.c_min < lambda && lambda < hc.c_max),
        lambda,
        format!("c_L = {}, c_M = {}", hc.c_min, hc.c_max),
    )
}

fn identity(spec: &ProblemSpec, pair: &Eigenpair) -> CheckOutcome {
    let skip = |detail: String| CheckOutcome::new(spec, CheckKind::Identity, CheckStatus::Skipped, f64::NAN, detail);
    if spec.s > IDENTITY_MAX_S {
        return skip(format!("s > {IDENTITY_MAX_S}"));
    }
    let forms = (
        derivative_identity_profile(spec, pair, -1.0),
        derivative_identity_profile(spec, pair, 1.0),
    );
    let (left, right) = match forms {
        (Ok(l), Ok(r)) => (l, r),
        (Err(e @ AnalysisError::Overflow(_)), _) | (_, Err(e @ AnalysisError::Overflow(_))) => {
            return skip(e.to_string())
        }
        (Err(e), _) | (_, Err(e)) => {
            return CheckOutcome::new(spec, CheckKind::Identity, CheckStatus::Fail, f64::NAN, e.to_string())
        }
    };
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let (rl, rr, cross) = (sup(&pair.dphi, &left), sup(&pair.dphi, &right), sup(&left, &right));
    let worst = rl.max(rr).max(cross);
    CheckOutcome::new(
        spec,
        CheckKind::Identity,
        pass_if(worst <= IDENTITY_TOL),
        worst,
        format!("residual y0=-1 {rl:e}, y0=+1 {rr:e}, forms differ by {cross:e}"),
    )
}

fn nodal(spec: &ProblemSpec, pair: &Eigenpair) -> (CheckOutcome, Option<NodalReport>) {
    match nodal_classify(spec, pair) {
        Ok(report) => {
            let mut detail = format!("q_s = {}, {:?}", report.q_s, report.classification);
            for d in &report.diagnostics {
                detail.push_str("; ");
                detail.push_str(d);
            }
            let outcome = CheckOutcome::new(
                spec,
                CheckKind::Nodal,
                pass_if(report.consistent),
                report.critical_points.len() as f64,
                detail,
            );
            (outcome, Some(report))
        }
        Err(e @ AnalysisError::ConstantPotential) => (
            CheckOutcome::new(spec, CheckKind::Nodal, CheckStatus::Skipped, f64::NAN, e.to_string()),
            None,
        ),
        Err(e) => (
            CheckOutcome::new(spec, CheckKind::Nodal, CheckStatus::Fail, f64::NAN, e.to_string()),
            None,
        ),
    }
}

fn second_deriv(spec: &ProblemSpec, pair: &Eigenpair) -> CheckOutcome {
    match second_derivative_checks(spec, pair) {
        Ok(checks) => {
            let ok = checks.iter().all(|c| c.agrees(1e-6, 1e-2));
            let worst = checks.iter().fold(0.0f64, |m, c| m.max(c.discrepancy()));
            let detail = checks
                .iter()
                .map(|c| format!("x_c = {:.6}: -phi'' = {:e}, predicted {:e}", c.x_c, c.measured, c.predicted))
                .collect::<Vec<_>>()
                .join("; ");
            CheckOutcome::new(spec, CheckKind::SecondDeriv, pass_if(ok), worst, detail)
        }
        Err(e) => CheckOutcome::new(spec, CheckKind::SecondDeriv, CheckStatus::Fail, f64::NAN, e.to_string()),
    }
}

/// Runs the requested checks on one converged pair, in the order of `kinds`.
pub fn run_checks(
    spec: &ProblemSpec,
    pair: &Eigenpair,
    kinds: impl IntoIterator<Item = CheckKind>,
) -> (Vec<CheckOutcome>, Option<NodalReport>) {
    let mut outcomes = Vec::new();
    let mut report = None;
    for kind in kinds {
        outcomes.push(match kind {
            CheckKind::Containment => containment(spec, pair),
            CheckKind::Identity => identity(spec, pair),
            CheckKind::Nodal => {
                let (o, r) = nodal(spec, pair);
                report = r;
                o
            }
            CheckKind::SecondDeriv => second_deriv(spec, pair),
        });
    }
    (outcomes, report)
}
