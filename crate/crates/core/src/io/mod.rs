//! Run configuration, result export (CSV, JSON, gnuplot) and the command-line
//! front end.

mod checks;
pub mod cli;
mod gnuplot;
mod presets;
mod records;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{NodalReport, SweepRecord};
use crate::assembly::ProblemSpec;
use crate::coefficients::{Coefficient, CoefficientError};
use crate::eigensolver::Eigenpair;

pub use checks::{run_checks, CheckOutcome, CheckStatus};
pub use gnuplot::{gnuplot_script, profile_csv};
pub use presets::{preset, presets, Preset, PrintedRow, TableRow, PRESET_NAMES};
pub use records::{parse_records_csv, records_csv, CSV_HEADER};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("unsupported result schema {0}")]
    Schema(u32),
    #[error("{0}")]
    Usage(String),
}

/// Serializes non-finite floats as `null` and reads `null` back as NaN.
pub mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            ser.serialize_f64(*v)
        } else {
            ser.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SValues {
    List { values: Vec<f64> },
    Range { min: f64, max: f64, per_decade: usize },
}

impl SValues {
    pub fn expand(&self) -> Vec<f64> {
        match self {
            Self::List { values } => values.clone(),
            Self::Range { min, max, per_decade } => crate::analysis::log_spaced(*min, *max, *per_decade),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Csv,
    Json,
    Gnuplot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CheckKind {
    Containment,
    Identity,
    Nodal,
    SecondDeriv,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [Self::Containment, Self::Identity, Self::Nodal, Self::SecondDeriv];

    pub fn name(self) -> &'static str {
        match self {
            Self::Containment => "containment",
            Self::Identity => "identity",
            Self::Nodal => "nodal",
            Self::SecondDeriv => "second_deriv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m_descriptor: String,
    pub c_descriptor: String,
    pub n: usize,
    pub s_values: SValues,
    pub outputs: BTreeSet<OutputKind>,
    pub out_dir: PathBuf,
    pub checks: BTreeSet<CheckKind>,
}

impl RunConfig {
    pub fn s_list(&self) -> Vec<f64> {
        self.s_values.expand()
    }

    pub fn coefficients(&self) -> Result<(Coefficient, Coefficient), CoefficientError> {
        Ok((self.m_descriptor.parse()?, self.c_descriptor.parse()?))
    }

    /// Problem at the first requested `s`.
    pub fn template(&self) -> Result<ProblemSpec, crate::Error> {
        let (m, c) = self.coefficients()?;
        let s = self.s_list().first().copied().unwrap_or(0.0);
        Ok(ProblemSpec::new(m, c, s, self.n)?)
    }
}

/// Nodal data of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalProfile {
    pub s: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl NodalProfile {
    pub fn new(spec: &ProblemSpec, pair: &Eigenpair) -> Result<Self, crate::Error> {
        let grid = crate::grid::CollocationGrid::new(spec.n)?;
        Ok(Self {
            s: spec.s,
            x: grid.nodes().to_vec(),
            phi: pair.phi.clone(),
            dphi: pair.dphi.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub schema: u32,
    pub tool_version: String,
    /// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set and
    /// left empty otherwise so that repeated runs are byte-identical.
    pub timestamp: Option<u64>,
    pub config: RunConfig,
    pub records: Vec<SweepRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodal_reports: Option<Vec<NodalReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigpairs: Option<Vec<NodalProfile>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
}

impl ResultSet {
    pub fn new(config: RunConfig, records: Vec<SweepRecord>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()),
            config,
            records,
            nodal_reports: None,
            eigpairs: None,
            checks: Vec::new(),
            table: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| IoError::Json(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    /// Fields this version does not know are ignored.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let rs: Self = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
        if rs.schema != SCHEMA_VERSION {
            return Err(IoError::Schema(rs.schema));
        }
        Ok(rs)
    }
}

/// Writes `contents` next to `path` under a temporary name, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let file_err = |source| IoError::File {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(file_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    tmp.write_all(contents).map_err(file_err)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(file_err)?;
    }
    tmp.as_file().sync_all().map_err(file_err)?;
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}
