use crate::analysis::SweepRecord;

use super::IoError;

pub const CSV_HEADER: [&str; 7] = ["s", "lambda", "gap", "phi_err", "dphi_norm", "kappa", "status"];

/// 17 significant digits, enough to reproduce every `f64` exactly.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_real(field: &str, line: usize) -> Result<f64, IoError> {
    field
        .trim()
        .parse()
        .map_err(|_| IoError::Csv(format!("line {line}: `{field}` is not a number")))
}

pub fn records_csv(records: &[SweepRecord]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| IoError::Csv(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in records {
        let row = [r.s, r.lambda, r.gap, r.phi_err, r.dphi_norm, r.kappa].map(fmt_real);
        w.write_record(row.iter().map(String::as_str).chain([r.status.to_string().as_str()]))
            .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Csv(e.to_string()))
}

pub fn parse_records_csv(text: &str) -> Result<Vec<SweepRecord>, IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| IoError::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(IoError::Csv(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (k, row) in r.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| IoError::Csv(e.to_string()))?;
        if row.len() != CSV_HEADER.len() {
            return Err(IoError::Csv(format!("line {line}: expected 7 fields, got {}", row.len())));
        }
        let v = |i: usize| parse_real(&row[i], line);
        out.push(SweepRecord {
            s: v(0)?,
            lambda: v(1)?,
            gap: v(2)?,
            phi_err: v(3)?,
            dphi_norm: v(4)?,
            kappa: v(5)?,
            status: row[6].parse().map_err(|e| IoError::Csv(format!("line {line}: {e}")))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::SolveStatus;

    #[test]
    fn header_and_format() {
        let rec = SweepRecord {
            s: 10000.0,
            lambda: 1.9999939,
            gap: -6.1e-6,
            phi_err: 6.5e-4,
            dphi_norm: 3.2e-3,
            kappa: 4.16,
            status: SolveStatus::Converged,
        };
        let text = records_csv(&[rec]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("s,lambda,gap,phi_err,dphi_norm,kappa,status"));
        assert_eq!(
            lines.next(),
            Some("1.0000000000000000e4,1.9999939000000000e0,-6.1000000000000000e-6,6.4999999999999997e-4,3.2000000000000002e-3,4.1600000000000001e0,converged")
        );
    }

    #[test]
    fn round_trip_with_failures() {
        let recs = vec![
            SweepRecord::failed(0.5, SolveStatus::MaxIterations),
            SweepRecord {
                s: 0.1 + 0.2,
                lambda: std::f64::consts::PI,
                gap: -f64::MIN_POSITIVE,
                phi_err: 1e300,
                dphi_norm: 0.0,
                kappa: f64::INFINITY,
                status: SolveStatus::Converged,
            },
        ];
        let back = parse_records_csv(&records_csv(&recs).unwrap()).unwrap();
        assert_eq!(back[1], recs[1]);
        assert_eq!(back[0].status, SolveStatus::MaxIterations);
        assert!(back[0].lambda.is_nan());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_records_csv("a,b\n1,2\n").is_err());
        assert!(parse_records_csv("s,lambda,gap,phi_err,dphi_norm,kappa,status\n1,x,1,1,1,1,converged\n").is_err());
        assert!(parse_records_csv("s,lambda,gap,phi_err,dphi_norm,kappa,status\n1,1,1,1,1,1,fine\n").is_err());
    }
}
