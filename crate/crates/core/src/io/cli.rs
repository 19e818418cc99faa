//! `advecta <solve|sweep|table|verify>`.
//!
//! Exit codes: 0 converged, 1 error, 2 unstable (or, for `verify`, a failed
//! check). Results are still written when the exit code is 2.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{sweep, thread_count_from_env, SweepRecord};
use crate::assembly::ProblemSpec;
use crate::eigensolver::SolveStatus;
use crate::{solve, Error};

use super::records::fmt_real;
use super::{
    gnuplot_script, preset, presets, profile_csv, records_csv, run_checks, write_atomic, CheckKind, CheckStatus,
    IoError, NodalProfile, OutputKind, Preset, ResultSet, RunConfig, SValues, TableRow, PRESET_NAMES,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;

pub const DEFAULT_N: usize = 801;
pub const DEFAULT_PER_DECADE: usize = 25;
/// Sweep range used when neither `--s` nor `--s-range` is given.
pub const DEFAULT_S_RANGE: (f64, f64) = (1e-2, 1e4);

#[derive(Debug, Parser)]
#[command(name = "advecta", version, about = "Principal eigenpairs of Neumann advection-diffusion operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at a single s and run the requested checks.
    Solve(RunArgs),
    /// Solve independently over a list or log-spaced range of s.
    Sweep(RunArgs),
    /// Reproduce the reference table at N = 801.
    Table(TableArgs),
    /// Run checks at every requested s and report PASS/FAIL per check.
    Verify(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Advection potential, e.g. `poly:4`, `shoulder`.
    #[arg(long = "m", value_name = "DESC")]
    pub m: String,
    /// Reaction coefficient, e.g. `affine:2,1`, `cos:40,2,0.3333333333`, `const:2`.
    #[arg(long = "c", value_name = "DESC")]
    pub c: String,
    /// One or more comma-separated values of s.
    #[arg(long = "s", value_name = "REAL", value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "s_range")]
    pub s: Vec<f64>,
    /// Log-spaced s values; PPD (points per decade) defaults to 25.
    #[arg(long = "s-range", value_name = "MIN:MAX:PPD")]
    pub s_range: Option<String>,
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', value_name = "csv,json,gnuplot")]
    pub out: Vec<OutputKind>,
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub checks: Vec<CheckKind>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// One of A1 A2 A3 B1 B2 B3 B2A B2B, or `all`.
    #[arg(default_value = "all")]
    pub preset: String,
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', value_name = "csv,json")]
    pub out: Vec<OutputKind>,
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}

fn parse_s_range(text: &str) -> Result<SValues, IoError> {
    let bad = |tok: &str| IoError::Usage(format!("--s-range: `{tok}` in `{text}` is invalid; expected MIN:MAX[:PPD]"));
    let parts: Vec<&str> = text.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(bad(text));
    }
    let real = |tok: &str| tok.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0).ok_or_else(|| bad(tok));
    let (min, max) = (real(parts[0])?, real(parts[1])?);
    if min > max {
        return Err(bad(parts[1]));
    }
    let per_decade = match parts.get(2) {
        Some(tok) => tok.trim().parse::<usize>().ok().filter(|p| *p > 0).ok_or_else(|| bad(tok))?,
        None => DEFAULT_PER_DECADE,
    };
    Ok(SValues::Range { min, max, per_decade })
}

impl RunArgs {
    pub fn config(&self, default_range: bool) -> Result<RunConfig, IoError> {
        let s_values = match (&self.s_range, self.s.is_empty()) {
            (Some(r), _) => parse_s_range(r)?,
            (None, false) => SValues::List { values: self.s.clone() },
            (None, true) if default_range => SValues::Range {
                min: DEFAULT_S_RANGE.0,
                max: DEFAULT_S_RANGE.1,
                per_decade: DEFAULT_PER_DECADE,
            },
            (None, true) => return Err(IoError::Usage("missing --s or --s-range".into())),
        };
        Ok(RunConfig {
            m_descriptor: self.m.clone(),
            c_descriptor: self.c.clone(),
            n: self.n,
            s_values,
            outputs: self.out.iter().copied().collect(),
            out_dir: self.dir.clone(),
            checks: self.checks.iter().copied().collect(),
        })
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => a.config(false).map_err(Error::from).and_then(|c| cmd_solve(&c, stdout)),
        Command::Sweep(a) => a.config(true).map_err(Error::from).and_then(|c| cmd_sweep(&c, stdout)),
        Command::Verify(a) => a.config(false).map_err(Error::from).and_then(|c| cmd_verify(&c, stdout)),
        Command::Table(a) => cmd_table(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn status_code(all_converged: bool) -> i32 {
    if all_converged {
        EXIT_OK
    } else {
        EXIT_UNSTABLE
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::Io(IoError::File {
        path: PathBuf::from("<stdout>"),
        source: e,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    Ok(write_atomic(&dir.join(name), contents.as_bytes())?)
}

/// Writes `<stem>.csv`, `<stem>.json`, profile CSVs and `<stem>.gp` as requested.
fn write_outputs(rs: &ResultSet, stem: &str, profiles: &[NodalProfile]) -> Result<(), Error> {
    let cfg = &rs.config;
    let dir = &cfg.out_dir;
    let wants = |k| cfg.outputs.contains(&k);
    let csv_name = format!("{stem}.csv");
    if wants(OutputKind::Csv) || wants(OutputKind::Gnuplot) {
        write_file(dir, &csv_name, &records_csv(&rs.records)?)?;
    }
    if wants(OutputKind::Json) {
        write_file(dir, &format!("{stem}.json"), &rs.to_json()?)?;
    }
    if wants(OutputKind::Gnuplot) {
        let mut files = Vec::new();
        for (k, p) in profiles.iter().enumerate() {
            let name = format!("{stem}_profile_{k:03}.csv");
            write_file(dir, &name, &profile_csv(p))?;
            files.push((name, p.s));
        }
        let title = format!("m = {}, c = {}, N = {}", cfg.m_descriptor, cfg.c_descriptor, cfg.n);
        write_file(dir, &format!("{stem}.gp"), &gnuplot_script(&title, &csv_name, &files))?;
    }
    Ok(())
}

fn summary_line(r: &SweepRecord) -> String {
    format!(
        "s = {:e}  lambda = {:.12e}  gap = {:.6e}  phi_err = {:.6e}  dphi_norm = {:.6e}  kappa = {:.4}  {}",
        r.s, r.lambda, r.gap, r.phi_err, r.dphi_norm, r.kappa, r.status
    )
}

fn check_lines(rs: &ResultSet, out: &mut dyn Write) -> Result<(), Error> {
    for c in &rs.checks {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        };
        writeln!(out, "{tag} {} s={:e}: {}", c.check.name(), c.s, c.detail).map_err(out_err)?;
    }
    Ok(())
}

/// Solves at every s in order, collecting records, checks and nodal data.
fn solve_each(config: &RunConfig, kinds: &BTreeSet<CheckKind>, keep_pairs: bool) -> Result<ResultSet, Error> {
    let template = config.template()?;
    let mut records = Vec::new();
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut pairs = Vec::new();
    for s in config.s_list() {
        let spec = template.with_s(s)?;
        let pair = solve(&spec)?;
        records.push(SweepRecord::from_pair(&spec, &pair));
        if pair.is_converged() {
            let (outcomes, report) = run_checks(&spec, &pair, kinds.iter().copied());
            checks.extend(outcomes);
            reports.extend(report);
        }
        if keep_pairs {
            pairs.push(NodalProfile::new(&spec, &pair)?);
        }
    }
    let mut rs = ResultSet::new(config.clone(), records);
    rs.checks = checks;
    if !reports.is_empty() {
        rs.nodal_reports = Some(reports);
    }
    if keep_pairs {
        rs.eigpairs = Some(pairs);
    }
    Ok(rs)
}

pub fn cmd_solve(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Error> {
    if config.s_list().len() != 1 {
        return Err(IoError::Usage("solve takes exactly one --s value".into()).into());
    }
    let rs = solve_each(config, &config.checks, true)?;
    let profiles = rs.eigpairs.clone().unwrap_or_default();
    write_outputs(&rs, "solve", &profiles)?;
    writeln!(out, "{}", summary_line(&rs.records[0])).map_err(out_err)?;
    check_lines(&rs, out)?;
    Ok(status_code(rs.records[0].status == SolveStatus::Converged))
}

/// Decade points of the sweep plus its last point, for profile plots.
fn profile_points(s: &[f64]) -> Vec<f64> {
    let mut picked: Vec<f64> = s
        .iter()
        .copied()
        .filter(|v| {
            let l = v.log10();
            (l - l.round()).abs() < 1e-9
        })
        .collect();
    if let Some(&last) = s.last() {
        if picked.last() != Some(&last) {
            picked.push(last);
        }
    }
    picked
}

pub fn cmd_sweep(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Error> {
    let template = config.template()?;
    let s_values = config.s_list();
    let records = sweep(&template, &s_values)?;
    let mut rs = ResultSet::new(config.clone(), records);
    if !config.checks.is_empty() {
        let checked = solve_each(config, &config.checks, false)?;
        rs.checks = checked.checks;
        rs.nodal_reports = checked.nodal_reports;
    }
    let mut profiles = Vec::new();
    if config.outputs.contains(&OutputKind::Gnuplot) {
        for s in profile_points(&s_values) {
            let spec = template.with_s(s)?;
            let pair = solve(&spec)?;
            if pair.is_converged() {
                profiles.push(NodalProfile::new(&spec, &pair)?);
            }
        }
    }
    write_outputs(&rs, "sweep", &profiles)?;
    if config.outputs.is_empty() {
        write!(out, "{}", records_csv(&rs.records)?).map_err(out_err)?;
    } else if let Some(last) = rs.records.last() {
        writeln!(out, "{} points; last: {}", rs.records.len(), summary_line(last)).map_err(out_err)?;
    }
    check_lines(&rs, out)?;
    Ok(status_code(rs.records.iter().all(|r| r.status == SolveStatus::Converged)))
}

pub fn cmd_verify(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Error> {
    let kinds: BTreeSet<CheckKind> = if config.checks.is_empty() {
        CheckKind::ALL.into_iter().collect()
    } else {
        config.checks.clone()
    };
    let rs = solve_each(config, &kinds, false)?;
    write_outputs(&rs, "verify", &[])?;
    for r in &rs.records {
        writeln!(out, "{}", summary_line(r)).map_err(out_err)?;
    }
    check_lines(&rs, out)?;
    let converged = rs.records.iter().all(|r| r.status == SolveStatus::Converged);
    let passed = rs.checks.iter().all(|c| c.passed());
    Ok(status_code(converged && passed))
}

fn table_csv(rows: &[TableRow]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| IoError::Csv(e.to_string());
    let mut header = vec!["preset".to_string(), "s".to_string()];
    for col in ["phi_err", "dphi_norm", "gap", "kappa"] {
        header.extend([col.to_string(), format!("{col}_printed"), format!("{col}_dev")]);
    }
    header.push("status".into());
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let r = &row.record;
        let p = &row.printed;
        let mut fields = vec![row.preset.clone(), fmt_real(r.s)];
        for (k, (c, pr)) in [(r.phi_err, p.phi_err), (r.dphi_norm, p.dphi_norm), (r.gap, p.gap), (r.kappa, p.kappa)]
            .into_iter()
            .enumerate()
        {
            fields.extend([fmt_real(c), fmt_real(pr), fmt_real(row.deviations[k])]);
        }
        fields.push(r.status.to_string());
        w.write_record(&fields).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Csv(e.to_string()))
}

/// Solves one preset at its terminal s.
pub fn table_row(p: &Preset, n: usize) -> Result<TableRow, Error> {
    let spec = ProblemSpec::new(p.m.clone(), p.c.clone(), p.s, n)?;
    let pair = solve(&spec)?;
    Ok(TableRow::new(p, SweepRecord::from_pair(&spec, &pair)))
}

pub fn cmd_table(args: &TableArgs, out: &mut dyn Write) -> Result<i32, Error> {
    let selected: Vec<Preset> = if args.preset.eq_ignore_ascii_case("all") {
        presets()
    } else {
        vec![preset(&args.preset).ok_or_else(|| {
            IoError::Usage(format!("unknown preset `{}`; expected one of {} or all", args.preset, PRESET_NAMES.join(" ")))
        })?]
    };
    let threads = thread_count_from_env();
    let rows: Vec<Result<TableRow, Error>> = if threads <= 1 {
        selected.iter().map(|p| table_row(p, args.n)).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        pool.install(|| selected.par_iter().map(|p| table_row(p, args.n)).collect())
    };
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let join = |f: fn(&Preset) -> String| selected.iter().map(f).collect::<Vec<_>>().join(";");
    let config = RunConfig {
        m_descriptor: join(|p| p.m.to_string()),
        c_descriptor: join(|p| p.c.to_string()),
        n: args.n,
        s_values: SValues::List {
            values: selected.iter().map(|p| p.s).collect(),
        },
        outputs: args.out.iter().copied().collect(),
        out_dir: args.dir.clone(),
        checks: BTreeSet::new(),
    };
    let mut rs = ResultSet::new(config, rows.iter().map(|r| r.record.clone()).collect());
    rs.table = rows.clone();
    if rs.config.outputs.contains(&OutputKind::Csv) {
        write_file(&args.dir, "table.csv", &table_csv(&rows)?)?;
    }
    if rs.config.outputs.contains(&OutputKind::Json) {
        write_file(&args.dir, "table.json", &rs.to_json()?)?;
    }

    writeln!(
        out,
        "{:<4} {:>9} {:>10} {:>8} {:>7} {:>10} {:>8} {:>7} {:>11} {:>9} {:>7} {:>7} {:>6} {:>7}  result",
        "case", "s", "phi_err", "printed", "dev", "dphi_norm", "printed", "dev", "lambda-c0", "printed", "dev", "kappa",
        "prnt", "dev"
    )
    .map_err(out_err)?;
    for row in &rows {
        let r = &row.record;
        let p = &row.printed;
        let d = &row.deviations;
        let failures = row.failures();
        let verdict = if failures.is_empty() {
            "ok".to_string()
        } else {
            format!("off: {}", failures.join(","))
        };
        writeln!(
            out,
            "{:<4} {:>9.0e} {:>10.3e} {:>8.1e} {:>6.1}% {:>10.3e} {:>8.1e} {:>6.1}% {:>11.3e} {:>9.1e} {:>6.1}% {:>7.3} {:>6.2} {:>6.1}%  {}",
            row.preset,
            r.s,
            r.phi_err,
            p.phi_err,
            100.0 * d[0],
            r.dphi_norm,
            p.dphi_norm,
            100.0 * d[1],
            r.gap,
            p.gap,
            100.0 * d[2],
            r.kappa,
            p.kappa,
            100.0 * d[3],
            verdict
        )
        .map_err(out_err)?;
    }
    Ok(status_code(rows.iter().all(|r| r.record.status == SolveStatus::Converged)))
}
