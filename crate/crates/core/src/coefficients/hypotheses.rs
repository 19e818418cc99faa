//! Sampled checks of the structural hypotheses on `m` and `c`, and the
//! transversal roots of `c - λ`.

use serde::{Deserialize, Serialize};

use super::{Coefficient, CoefficientError};

/// Uniform scan resolution for [`transversal_roots`].
pub const ROOT_SCAN_INTERVALS: usize = 10_000;

const MIN_SAMPLES: usize = 1000;
const MERGE_DIST: f64 = 1e-7;

/// Result of checking that `m` has a unique interior maximizer with one-signed
/// derivative on each side of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmReport {
    pub hm_ok: bool,
    pub x0: f64,
    /// Zeros of `m'` in `(-1, 1)`, ascending. Includes touching zeros.
    pub critical_points: Vec<f64>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "y0", rename_all = "snake_case")]
pub enum HcClass {
    Increasing,
    Decreasing,
    InteriorMax(f64),
    InteriorMin(f64),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcReport {
    pub class: HcClass,
    pub c_min: f64,
    pub c_max: f64,
    /// `c` is nowhere locally constant on the scan grid, so every level set
    /// has finitely many transversal points.
    pub tc_ok: bool,
}

fn scan_points(intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|k| -1.0 + 2.0 * k as f64 / intervals as f64)
        .collect()
}

fn tol_sign(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

/// Bisection on a bracket where `f(lo)` and `f(hi)` have opposite raw signs.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, ftol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 || fm.abs() <= ftol && hi - lo <= 1e-12 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `|f|` on `[lo, hi]`.
fn min_abs(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a).abs(), f(b).abs());
    while hi - lo > 1e-12 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a).abs();
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b).abs();
        }
    }
    0.5 * (lo + hi)
}

/// All zeros of `f` on the scan: crossings refined by bisection, touching
/// zeros refined by minimizing `|f|`.
fn scan_zeros(f: &impl Fn(f64) -> f64, xs: &[f64], vals: &[f64], touch_tol: f64) -> Vec<f64> {
    let mut zeros = Vec::new();
    let mut prev: Option<usize> = None;
    for k in 0..xs.len() {
        if vals[k] == 0.0 {
            continue;
        }
        if let Some(p) = prev {
            if (vals[p] > 0.0) != (vals[k] > 0.0) {
                zeros.push(bisect(f, xs[p], xs[k], 0.0));
            } else if k > p + 1 {
                // exact zeros strictly inside a same-sign bracket
                zeros.extend(xs[p + 1..k].iter().copied());
            }
        }
        prev = Some(k);
    }
    for k in 1..xs.len().saturating_sub(1) {
        let (l, c, r) = (vals[k - 1], vals[k], vals[k + 1]);
        let same_side = l != 0.0 && r != 0.0 && (l > 0.0) == (r > 0.0);
        if same_side && c.abs() <= l.abs() && c.abs() <= r.abs() && (c == 0.0 || (c > 0.0) == (l > 0.0)) {
            let x = min_abs(f, xs[k - 1], xs[k + 1]);
            if f(x).abs() <= touch_tol {
                zeros.push(x);
            }
        }
    }
    zeros.retain(|x| *x > -1.0 && *x < 1.0);
    zeros.sort_by(f64::total_cmp);
    zeros.dedup_by(|a, b| (*a - *b).abs() < MERGE_DIST);
    zeros
}

/// Checks that `m` has a unique interior maximizer `x0` with `m' >= 0` to its
/// left, `m' <= 0` to its right, and finitely many critical points.
///
/// `samples` below 1000 is raised to 1000.
pub fn validate_hm(m: &Coefficient, samples: usize) -> HmReport {
    let samples = samples.max(MIN_SAMPLES);
    let xs = scan_points(samples);
    let vals = m.sample(&xs);
    let ders = m.sample_deriv(&xs);
    let dscale = ders.iter().fold(1.0f64, |a, d| a.max(d.abs()));
    let tol = 1e-12 * dscale;
    let mut diagnostics = Vec::new();

    let flat = ders.windows(2).any(|w| w[0] == 0.0 && w[1] == 0.0);
    if flat {
        diagnostics.push("m' vanishes on a whole interval".to_string());
    }

    let deriv = |x: f64| m.derivative(x);
    let critical_points = scan_zeros(&deriv, &xs, &ders, 1e-10 * dscale);
    if critical_points.len() > samples / 10 {
        diagnostics.push(format!("{} critical points: not finitely many", critical_points.len()));
    }

    let (kmax, vmax) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let best_critical = critical_points
        .iter()
        .copied()
        .max_by(|a, b| m.value(*a).total_cmp(&m.value(*b)));
    let x0 = match best_critical {
        Some(xc) if m.value(xc) >= vmax - 1e-14 * vmax.abs().max(1.0) => xc,
        _ => {
            diagnostics.push("maximum of m is not attained at an interior critical point".to_string());
            xs[kmax]
        }
    };
    if !(x0 > -1.0 && x0 < 1.0) {
        diagnostics.push(format!("maximizer x0 = {x0} is not interior"));
    }
    // One-signed m' on each side, together with finitely many critical
    // points, makes the maximizer unique.
    if let Some(k) = xs.iter().zip(&ders).position(|(x, d)| *x < x0 && tol_sign(*d, tol) < 0) {
        diagnostics.push(format!("m' < 0 at x = {} left of x0", xs[k]));
    }
    if let Some(k) = xs.iter().zip(&ders).position(|(x, d)| *x > x0 && tol_sign(*d, tol) > 0) {
        diagnostics.push(format!("m' > 0 at x = {} right of x0", xs[k]));
    }

    HmReport {
        hm_ok: diagnostics.is_empty(),
        x0,
        critical_points,
        diagnostics,
    }
}

/// Classifies `c` as monotone, single interior extremum, or none of these.
pub fn classify_hc(c: &Coefficient, samples: usize) -> HcReport {
    let samples = samples.max(MIN_SAMPLES);
    let xs = scan_points(samples);
    let vals = c.sample(&xs);
    let ders = c.sample_deriv(&xs);
    let dscale = ders.iter().fold(1.0f64, |a, d| a.max(d.abs()));
    let tol = 1e-12 * dscale;

    // runs of strict sign, each with the index where it starts and ends
    let mut runs: Vec<(i8, usize, usize)> = Vec::new();
    for (k, d) in ders.iter().enumerate() {
        let s = tol_sign(*d, tol);
        if s == 0 {
            continue;
        }
        match runs.last_mut() {
            Some(run) if run.0 == s => run.2 = k,
            _ => runs.push((s, k, k)),
        }
    }
    let deriv = |x: f64| c.derivative(x);
    let class = match runs.as_slice() {
        [(1, ..)] => HcClass::Increasing,
        [(-1, ..)] => HcClass::Decreasing,
        [(1, _, a), (-1, b, _)] => HcClass::InteriorMax(bisect(deriv, xs[*a], xs[*b], 0.0)),
        [(-1, _, a), (1, b, _)] => HcClass::InteriorMin(bisect(deriv, xs[*a], xs[*b], 0.0)),
        _ => HcClass::None,
    };
    let extra = match class {
        HcClass::InteriorMax(y) | HcClass::InteriorMin(y) => Some(c.value(y)),
        _ => None,
    };
    let (c_min, c_max) = vals
        .iter()
        .copied()
        .chain(extra)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let flat = ders.windows(2).any(|w| w[0] == 0.0 && w[1] == 0.0);
    let sign_changes = runs.len().saturating_sub(1);
    HcReport {
        class,
        c_min,
        c_max,
        tc_ok: !flat && sign_changes <= samples / 10,
    }
}

/// Points of `(-1, 1)` where `c - λ` changes sign, ascending, each refined by
/// bisection.
///
/// Zeros where `c - λ` touches without crossing are omitted. If `c - λ`
/// vanishes on a stretch of ten or more scan intervals the level set is not
/// discrete and [`CoefficientError::NonTransversal`] is returned.
pub fn transversal_roots(c: &Coefficient, lambda: f64) -> Result<Vec<f64>, CoefficientError> {
    let xs = scan_points(ROOT_SCAN_INTERVALS);
    let g: Vec<f64> = xs.iter().map(|&x| c.value(x) - lambda).collect();
    let scale = c.sample(&xs).iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-12 * scale;

    let mut roots = Vec::new();
    let mut prev: Option<(usize, i8)> = None;
    let mut zero_run = 0usize;
    for (k, gk) in g.iter().enumerate() {
        let s = tol_sign(*gk, tol);
        if s == 0 {
            zero_run += 1;
            if zero_run > 10 {
                return Err(CoefficientError::NonTransversal);
            }
            continue;
        }
        zero_run = 0;
        if let Some((p, sp)) = prev {
            if sp != s {
                let f = |x: f64| c.value(x) - lambda;
                roots.push(bisect(f, xs[p], xs[k], 1e-12));
            }
        }
        prev = Some((k, s));
    }
    if prev.is_none() {
        return Err(CoefficientError::NonTransversal);
    }
    roots.retain(|x| *x > -1.0 && *x < 1.0);
    Ok(roots)
}
