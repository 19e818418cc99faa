//! The eight reference problems and their published values at `N = 801`.

use serde::{Deserialize, Serialize};

use crate::analysis::SweepRecord;
use crate::coefficients::Coefficient;

pub const PRESET_NAMES: [&str; 8] = ["A1", "A2", "A3", "B1", "B2", "B3", "B2A", "B2B"];

/// Relative tolerance on `‖φ-1‖∞`, `‖φ'‖∞` and `λ - c(0)`.
pub const METRIC_TOL: f64 = 0.05;
/// Relative tolerance on `κ`.
pub const KAPPA_TOL: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedRow {
    pub phi_err: f64,
    pub dphi_norm: f64,
    pub gap: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub m: Coefficient,
    pub c: Coefficient,
    pub s: f64,
    pub printed: PrintedRow,
}

fn row(phi_err: f64, dphi_norm: f64, gap: f64, kappa: f64) -> PrintedRow {
    PrintedRow {
        phi_err,
        dphi_norm,
        gap,
        kappa,
    }
}

pub fn presets() -> Vec<Preset> {
    let poly = |n| Coefficient::poly_bump(n).expect("even exponent");
    let well = || Coefficient::cosine_well(40.0, 2.0, 1.0 / 3.0);
    let p = |name, m, c, s, printed| Preset {
        name,
        m,
        c,
        s,
        printed,
    };
    vec![
        p("A1", poly(4), well(), 1e6, row(3.0e-4, 4.0e-3, 4.5e-3, 7.4)),
        p("A2", poly(10), well(), 1e6, row(1.1e-1, 3.2e-1, 2.6e-1, 2.55)),
        p("A3", poly(16), well(), 1e6, row(4.0e-1, 7.6e-1, 4.7e-1, 1.94)),
        p("B1", poly(4), Coefficient::affine(2.0, 1.0), 1e4, row(6.5e-4, 3.2e-3, -6.1e-6, 4.16)),
        p("B2", poly(10), Coefficient::affine(2.0, 1.0), 1e4, row(3.2e-2, 6.3e-2, -2.2e-3, 2.02)),
        p("B3", poly(16), Coefficient::affine(2.0, 1.0), 1e4, row(9.3e-2, 1.3e-1, -1.0e-2, 1.66)),
        p("B2A", poly(4), Coefficient::affine(2.0, 0.1), 1e4, row(6.5e-5, 3.2e-4, -6.1e-8, 4.16)),
        p("B2B", poly(4), Coefficient::affine(2.0, 10.0), 1e4, row(6.5e-3, 3.2e-2, -6.1e-4, 4.16)),
    ]
}

/// Case-insensitive lookup.
pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
}

fn rel_dev(computed: f64, printed: f64) -> f64 {
    (computed - printed).abs() / printed.abs()
}

/// One computed row against its published counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub preset: String,
    pub record: SweepRecord,
    pub printed: PrintedRow,
    /// Relative deviations in the order `phi_err, dphi_norm, gap, kappa`.
    pub deviations: [f64; 4],
}

impl TableRow {
    pub fn new(preset: &Preset, record: SweepRecord) -> Self {
        let p = preset.printed;
        let deviations = [
            rel_dev(record.phi_err, p.phi_err),
            rel_dev(record.dphi_norm, p.dphi_norm),
            rel_dev(record.gap, p.gap),
            rel_dev(record.kappa, p.kappa),
        ];
        Self {
            preset: preset.name.to_string(),
            record,
            printed: p,
            deviations,
        }
    }

    /// Failing columns by name; empty when the row reproduces.
    pub fn failures(&self) -> Vec<&'static str> {
        let names = ["phi_err", "dphi_norm", "gap", "kappa"];
        let tols = [METRIC_TOL, METRIC_TOL, METRIC_TOL, KAPPA_TOL];
        names
            .iter()
            .zip(tols)
            .zip(self.deviations)
            .filter(|((_, tol), d)| !(*d <= *tol))
            .map(|((n, _), _)| *n)
            .collect()
    }

    pub fn reproduces(&self) -> bool {
        self.failures().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::SolveStatus;

    #[test]
    fn lookup() {
        assert_eq!(presets().len(), 8);
        assert_eq!(preset("b2a").unwrap().name, "B2A");
        assert!(preset("C1").is_none());
        let a1 = preset("A1").unwrap();
        assert!((a1.c.value(0.0) - 42.2017).abs() < 1e-4);
    }

    #[test]
    fn deviations_and_nan() {
        let p = preset("B1").unwrap();
        let rec = SweepRecord {
            s: 1e4,
            lambda: 2.0 - 6.1e-6,
            gap: -6.2e-6,
            phi_err: 6.5e-4,
            dphi_norm: 3.0e-3,
            kappa: 4.16,
            status: SolveStatus::Converged,
        };
        let row = TableRow::new(&p, rec);
        assert_eq!(row.failures(), vec!["dphi_norm"]);
        let row = TableRow::new(&p, SweepRecord::failed(1e4, SolveStatus::Unstable));
        assert_eq!(row.failures().len(), 4);
    }
}
