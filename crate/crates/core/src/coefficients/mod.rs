//! Coefficient functions `m(x)` and `c(x)` on `[-1, 1]` with exact derivatives.
//!
//! Closed-form families never differentiate samples; only [`Coefficient::Tabulated`]
//! falls back to the collocation matrix.

mod hypotheses;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{Discretization, GridError};

pub use hypotheses::{
    classify_hc, transversal_roots, validate_hm, HcClass, HcReport, HmReport, ROOT_SCAN_INTERVALS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefficientError {
    #[error("x = {0} lies outside [-1, 1]")]
    Domain(f64),
    #[error("invalid coefficient descriptor `{descriptor}`: {reason}")]
    Parse { descriptor: String, reason: String },
    #[error("c - lambda vanishes on a whole interval; no finite set of transversal roots")]
    NonTransversal,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Samples of a function on a CGL grid, interpolated between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: crate::grid::CollocationGrid,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl Tabulated {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    /// `1 - x^n`, `n` even.
    PolyBump { n: u32 },
    /// `a + b x`.
    Affine { a: f64, b: f64 },
    /// `amplitude * (offset - cos(x - shift))`.
    CosineWell { amplitude: f64, offset: f64, shift: f64 },
    /// `m' = -x (x + 1/2)^2`, normalized so `m(0) = 1`. Interior maximum at 0
    /// plus a degenerate critical point at `-1/2`.
    Shoulder,
    Constant(f64),
    Tabulated(Tabulated),
}

impl Coefficient {
    pub fn poly_bump(n: u32) -> Result<Self, CoefficientError> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(CoefficientError::Parse {
                descriptor: format!("poly:{n}"),
                reason: "exponent must be an even integer >= 2".into(),
            });
        }
        Ok(Self::PolyBump { n })
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Self::Affine { a, b }
    }

    pub fn cosine_well(amplitude: f64, offset: f64, shift: f64) -> Self {
        Self::CosineWell { amplitude, offset, shift }
    }

    pub fn constant(v: f64) -> Self {
        Self::Constant(v)
    }

    /// Builds a tabulated coefficient from nodal values on `disc`'s grid.
    pub fn tabulated(disc: &Discretization, values: Vec<f64>) -> Result<Self, CoefficientError> {
        if values.len() != disc.grid.len() {
            return Err(GridError::Dimension {
                expected: disc.grid.len(),
                got: values.len(),
            }
            .into());
        }
        let derivs = disc.differentiate(&values);
        Ok(Self::Tabulated(Tabulated {
            grid: disc.grid.clone(),
            values,
            derivs,
        }))
    }

    pub fn eval(&self, x: f64) -> Result<f64, CoefficientError> {
        check_domain(x)?;
        Ok(self.value(x))
    }

    pub fn eval_deriv(&self, x: f64) -> Result<f64, CoefficientError> {
        check_domain(x)?;
        Ok(self.derivative(x))
    }

    /// Unchecked evaluation for points already known to lie in `[-1, 1]`.
    pub(crate) fn value(&self, x: f64) -> f64 {
        match self {
            Self::PolyBump { n } => 1.0 - x.powi(*n as i32),
            Self::Affine { a, b } => a + b * x,
            Self::CosineWell { amplitude, offset, shift } => amplitude * (offset - (x - shift).cos()),
            Self::Shoulder => 1.0 - x * x * (x * x / 4.0 + x / 3.0 + 0.125),
            Self::Constant(v) => *v,
            Self::Tabulated(t) => t.grid.interpolate(&t.values, x).expect("length fixed at construction"),
        }
    }

    pub(crate) fn derivative(&self, x: f64) -> f64 {
        match self {
            Self::PolyBump { n } => -(*n as f64) * x.powi(*n as i32 - 1),
            Self::Affine { b, .. } => *b,
            Self::CosineWell { amplitude, shift, .. } => amplitude * (x - shift).sin(),
            Self::Shoulder => -x * (x + 0.5) * (x + 0.5),
            Self::Constant(_) => 0.0,
            Self::Tabulated(t) => t.grid.interpolate(&t.derivs, x).expect("length fixed at construction"),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant(_) => true,
            Self::Affine { b, .. } => *b == 0.0,
            Self::CosineWell { amplitude, .. } => *amplitude == 0.0,
            Self::Tabulated(t) => t.values.iter().all(|v| *v == t.values[0]),
            _ => false,
        }
    }

    /// Values at each point of `xs` (assumed inside `[-1, 1]`).
    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.value(x)).collect()
    }

    pub fn sample_deriv(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.derivative(x)).collect()
    }
}

fn check_domain(x: f64) -> Result<(), CoefficientError> {
    if (-1.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(CoefficientError::Domain(x))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PolyBump { n } => write!(f, "poly:{n}"),
            Self::Affine { a, b } => write!(f, "affine:{a},{b}"),
            Self::CosineWell { amplitude, offset, shift } => write!(f, "cos:{amplitude},{offset},{shift}"),
            Self::Shoulder => write!(f, "shoulder"),
            Self::Constant(v) => write!(f, "const:{v}"),
            Self::Tabulated(t) => write!(f, "tabulated:{}", t.grid.order()),
        }
    }
}

/// Grammar: `family[:comma-separated reals]`.
impl FromStr for Coefficient {
    type Err = CoefficientError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| CoefficientError::Parse {
            descriptor: s.to_string(),
            reason: reason.to_string(),
        };
        let (family, args) = match s.split_once(':') {
            Some((family, args)) => (family, Some(args)),
            None => (s, None),
        };
        let params: Vec<f64> = match args {
            None => Vec::new(),
            Some(args) => args
                .split(',')
                .map(|tok| tok.parse::<f64>().map_err(|_| fail(&format!("`{tok}` is not a real number"))))
                .collect::<Result<_, _>>()?,
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(fail("parameters must be finite"));
        }
        let arity = |k: usize| {
            if params.len() == k {
                Ok(())
            } else {
                Err(fail(&format!("`{family}` takes {k} parameter(s), got {}", params.len())))
            }
        };
        match family {
            "poly" => {
                arity(1)?;
                let n = params[0];
                if n.fract() != 0.0 || !(2.0..=1000.0).contains(&n) || n % 2.0 != 0.0 {
                    return Err(fail("exponent must be an even integer >= 2"));
                }
                Ok(Self::PolyBump { n: n as u32 })
            }
            "affine" => {
                arity(2)?;
                Ok(Self::affine(params[0], params[1]))
            }
            "cos" => {
                arity(3)?;
                Ok(Self::cosine_well(params[0], params[1], params[2]))
            }
            "shoulder" => {
                if args.is_some() {
                    return Err(fail("`shoulder` takes no parameters"));
                }
                Ok(Self::Shoulder)
            }
            "const" => {
                arity(1)?;
                Ok(Self::constant(params[0]))
            }
            _ => Err(fail("unknown family")),
        }
    }
}
