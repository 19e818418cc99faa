use std::fmt::Write;

use super::records::fmt_real;
use super::NodalProfile;

/// `x,phi,dphi` in ascending `x`.
pub fn profile_csv(profile: &NodalProfile) -> String {
    let mut out = String::from("x,phi,dphi\n");
    for i in (0..profile.x.len()).rev() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_real(profile.x[i]),
            fmt_real(profile.phi[i]),
            fmt_real(profile.dphi[i])
        );
    }
    out
}

fn quoted(files: &[(String, f64)]) -> String {
    files.iter().map(|(f, _)| f.as_str()).collect::<Vec<_>>().join(" ")
}

/// Three panels: `φ_s` and `φ_s'` for each profile file, and `λ - c(x0)`
/// against `s` from the sweep CSV. Paths are relative to the script.
pub fn gnuplot_script(title: &str, sweep_csv: &str, profiles: &[(String, f64)]) -> String {
    let mut g = String::new();
    let _ = writeln!(g, "# {title}");
    g.push_str("set datafile separator ','\n");
    g.push_str("set terminal pngcairo size 1500,450 noenhanced\n");
    let _ = writeln!(g, "set output '{}.png'", sweep_csv.trim_end_matches(".csv"));
    g.push_str("set multiplot layout 1,3\n");
    g.push_str("set key bottom left\n");
    if profiles.is_empty() {
        g.push_str("set multiplot next\nset multiplot next\n");
    } else {
        let labels = profiles
            .iter()
            .map(|(_, s)| format!("s={s:e}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(g, "files = \"{}\"", quoted(profiles));
        let _ = writeln!(g, "labels = \"{labels}\"");
        g.push_str("set title 'phi_s'\nset xlabel 'x'\n");
        g.push_str("plot for [i=1:words(files)] word(files, i) using 1:2 skip 1 with lines title word(labels, i)\n");
        g.push_str("set title \"phi_s'\"\n");
        g.push_str("plot for [i=1:words(files)] word(files, i) using 1:3 skip 1 with lines title word(labels, i)\n");
    }
    g.push_str("set title 'lambda(s) - c(x0)'\nset xlabel 's'\nset logscale x\n");
    let _ = writeln!(g, "plot '{sweep_csv}' using 1:3 skip 1 with linespoints notitle");
    g.push_str("unset multiplot\n");
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_ascending() {
        let p = NodalProfile {
            s: 1.0,
            x: vec![1.0, 0.0, -1.0],
            phi: vec![0.5, 1.0, 0.5],
            dphi: vec![0.0, 0.0, 0.0],
        };
        let text = profile_csv(&p);
        let first = text.lines().nth(1).unwrap();
        assert!(first.starts_with("-1.0000000000000000e0,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn script_references_files() {
        let s = gnuplot_script("B1", "sweep.csv", &[("profile_000.csv".into(), 0.01)]);
        assert!(s.contains("'sweep.csv'"));
        assert!(s.contains("profile_000.csv"));
        assert!(s.contains("multiplot layout 1,3"));
    }
}
