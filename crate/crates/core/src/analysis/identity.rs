//! Integral representation of `φ'` from a critical point `y0` of `φ`:
//!
//! ```text
//! φ'(x) = ∫_{y0}^{x} (c(t) - λ) φ(t) exp(2s (m(t) - m(x))) dt
//! ```
//!
//! evaluated at every node with Clenshaw–Curtis quadrature on `[y0, x]`.

use crate::assembly::ProblemSpec;
use crate::eigensolver::Eigenpair;
use crate::grid::CollocationGrid;

use super::AnalysisError;

/// Largest exponent `2s(m(t) - m(x))` the quadrature will evaluate.
pub const MAX_EXPONENT: f64 = 600.0;

const CRITICAL_TOL: f64 = 1e-8;

/// The right-hand side of the representation at every node, in grid order.
pub fn derivative_identity_profile(
    spec: &ProblemSpec,
    pair: &Eigenpair,
    y0: f64,
) -> Result<Vec<f64>, AnalysisError> {
    if !(-1.0..=1.0).contains(&y0) {
        return Err(AnalysisError::Domain(y0));
    }
    let grid = CollocationGrid::new(spec.n)?;
    let slope = if y0.abs() == 1.0 { 0.0 } else { grid.interpolate(&pair.dphi, y0)? };
    if slope.abs() > CRITICAL_TOL {
        return Err(AnalysisError::NotCritical { y0, dphi: slope });
    }

    // Reference rule on [-1, 1], mapped onto each [y0, x].
    let quad_nodes = grid.nodes();
    let quad_weights = grid.cc_weights();
    let lambda = pair.lambda;
    let mut profile = Vec::with_capacity(grid.len());
    for &x in grid.nodes() {
        if x == y0 {
            profile.push(0.0);
            continue;
        }
        let mid = 0.5 * (x + y0);
        let half = 0.5 * (x - y0);
        let mx = spec.m.value(x);
        let mut acc = 0.0;
        for (tau, w) in quad_nodes.iter().zip(quad_weights) {
            let t = (mid + half * tau).clamp(-1.0, 1.0);
            let exponent = 2.0 * spec.s * (spec.m.value(t) - mx);
            if exponent > MAX_EXPONENT {
                return Err(AnalysisError::Overflow(exponent));
            }
            let phi_t = grid.interpolate(&pair.phi, t)?;
            acc += w * (spec.c.value(t) - lambda) * phi_t * exponent.exp();
        }
        profile.push(half * acc);
    }
    Ok(profile)
}

/// `max |φ'(x_i) - Q(x_i)|` over all nodes, `Q` from [`derivative_identity_profile`].
pub fn derivative_identity_residual(
    spec: &ProblemSpec,
    pair: &Eigenpair,
    y0: f64,
) -> Result<f64, AnalysisError> {
    let q = derivative_identity_profile(spec, pair, y0)?;
    Ok(pair
        .dphi
        .iter()
        .zip(&q)
        .map(|(d, q)| (d - q).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Coefficient;
    use crate::solve;

    #[test]
    fn constant_potential_has_vanishing_integrand() {
        let spec = ProblemSpec::new(Coefficient::poly_bump(4).unwrap(), Coefficient::constant(2.0), 3.0, 32).unwrap();
        let pair = solve(&spec).unwrap();
        let r = derivative_identity_residual(&spec, &pair, -1.0).unwrap();
        assert!(r <= 1e-9, "{r}");
    }

    #[test]
    fn overflow_guard_trips() {
        let spec =
            ProblemSpec::new(Coefficient::poly_bump(4).unwrap(), Coefficient::affine(2.0, 1.0), 1e4, 32).unwrap();
        let pair = solve(&spec).unwrap();
        assert!(matches!(
            derivative_identity_residual(&spec, &pair, -1.0),
            Err(AnalysisError::Overflow(_))
        ));
    }

    #[test]
    fn rejects_non_critical_base_point() {
        let spec =
            ProblemSpec::new(Coefficient::poly_bump(4).unwrap(), Coefficient::affine(2.0, 1.0), 1.0, 32).unwrap();
        let pair = solve(&spec).unwrap();
        assert!(matches!(
            derivative_identity_residual(&spec, &pair, 0.0),
            Err(AnalysisError::NotCritical { .. })
        ));
        assert!(matches!(
            derivative_identity_residual(&spec, &pair, 1.5),
            Err(AnalysisError::Domain(_))
        ));
    }
}
