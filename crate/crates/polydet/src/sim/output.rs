//! CSV and gnuplot output.
//!
//! Sweep files are RFC-4180 rows under the fixed header
//! `snr_db,method,L,user,gamma_mean,gamma_std,ber,trials,seed`, preceded by
//! `#`-prefixed attribution lines (tool version, subcommand, config digest,
//! master seed) that both gnuplot and most CSV readers skip. All numbers use
//! the shortest round-trip decimal form, so identical runs produce
//! byte-identical files.

use super::report::MomentReport;
use super::sweep::ResultRow;
use crate::error::Result;
use std::io::Write;
use std::path::Path;

pub const SWEEP_HEADER: &str = "snr_db,method,L,user,gamma_mean,gamma_std,ber,trials,seed";
pub const REPORT_HEADER: &str = "n,scope,user,asymptotic,empirical_mean,empirical_std,rel_err";

/// Attribution stamped into every output file.
#[derive(Clone, Debug)]
pub struct RunMeta {
    pub subcommand: &'static str,
    pub config_digest: String,
    pub seed: u64,
}

impl RunMeta {
    fn header_lines(&self) -> String {
        format!(
            "# polydet v{} {}\n# config_sha256={} seed={}\n",
            env!("CARGO_PKG_VERSION"),
            self.subcommand,
            self.config_digest,
            self.seed
        )
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() { "nan".to_string() } else { format!("{v}") }
}

/// Writes sweep rows as CSV.
pub fn write_sweep_csv(path: &Path, rows: &[ResultRow], meta: &RunMeta) -> Result<()> {
    let mut out = Vec::new();
    out.write_all(meta.header_lines().as_bytes())?;
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt(r.snr_db),
            r.method,
            r.method.rank(),
            r.user,
            fmt(r.gamma_mean),
            fmt(r.gamma_std),
            fmt(r.ber),
            r.trials,
            r.seed
        )?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a moment report as CSV.
pub fn write_report_csv(path: &Path, report: &MomentReport, meta: &RunMeta) -> Result<()> {
    let mut out = Vec::new();
    out.write_all(meta.header_lines().as_bytes())?;
    writeln!(out, "{REPORT_HEADER}")?;
    for r in &report.rows {
        let (scope, user) = match r.user {
            None => ("global", String::new()),
            Some(k) => ("user", k.to_string()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            scope,
            user,
            fmt(r.asymptotic),
            fmt(r.empirical_mean),
            fmt(r.empirical_std),
            fmt(r.rel_err)
        )?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Emits a gnuplot script regenerating an SINR-versus-SNR figure from a
/// sweep CSV written by [`write_sweep_csv`].
pub fn gnuplot_sinr_script(csv_name: &str, l_values: &[usize]) -> String {
    let mut body = vec![
        format!("csv = \"{csv_name}\""),
        "set datafile separator comma".into(),
        "set key top left autotitle columnhead".into(),
        "set xlabel 'SNR [dB]'".into(),
        "set ylabel 'average SINR [dB]'".into(),
        "set grid".into(),
        "db(x) = 10.0 * log10(x)".into(),
    ];
    let mut plots = vec![
        "csv using 1:(strcol(2) eq 'matched' ? db($5) : NaN) with points pt 4 title 'matched'".to_string(),
        "csv using 1:(strcol(2) eq 'lmmse' ? db($5) : NaN) with points pt 6 title 'LMMSE'".to_string(),
        "csv using 1:(strcol(2) eq 'lmmse-asympt' ? db($5) : NaN) with lines lc 'black' title 'LMMSE (det.)'"
            .to_string(),
    ];
    for &l in l_values {
        plots.push(format!(
            "csv using 1:(strcol(2) eq 'poly' && $3 == {l} ? db($5) : NaN) with points pt 7 title 'poly L={l}'"
        ));
        plots.push(format!(
            "csv using 1:(strcol(2) eq 'poly-asympt' && $3 == {l} ? db($5) : NaN) with lines title 'poly L={l} (det.)'"
        ));
    }
    body.push(format!("plot \\\n  {}", plots.join(", \\\n  ")));
    body.join("\n") + "\n"
}

/// Emits a gnuplot script for a BER-versus-SNR figure.
pub fn gnuplot_ber_script(csv_name: &str, l_values: &[usize]) -> String {
    let mut body = vec![
        format!("csv = \"{csv_name}\""),
        "set datafile separator comma".into(),
        "set key bottom left autotitle columnhead".into(),
        "set xlabel 'SNR [dB]'".into(),
        "set ylabel 'average BER'".into(),
        "set logscale y".into(),
        "set grid".into(),
    ];
    let mut plots = vec![
        "csv using 1:(strcol(2) eq 'matched' ? $7 : NaN) with linespoints pt 4 title 'matched'".to_string(),
        "csv using 1:(strcol(2) eq 'lmmse' ? $7 : NaN) with linespoints pt 6 title 'LMMSE'".to_string(),
    ];
    for &l in l_values {
        plots.push(format!(
            "csv using 1:(strcol(2) eq 'poly' && $3 == {l} ? $7 : NaN) with linespoints pt 7 title 'poly L={l}'"
        ));
    }
    body.push(format!("plot \\\n  {}", plots.join(", \\\n  ")));
    body.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectionMethod;
    use crate::sim::sweep::UserTag;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                snr_db: -10.0,
                method: DetectionMethod::Poly { rank: 2 },
                user: UserTag::User(3),
                gamma_mean: 0.125,
                gamma_std: 0.01,
                ber: 0.35,
                trials: 100,
                seed: 9,
            },
            ResultRow {
                snr_db: 0.0,
                method: DetectionMethod::LmmseAsymptotic,
                user: UserTag::Pooled,
                gamma_mean: f64::NAN,
                gamma_std: 0.0,
                ber: f64::NAN,
                trials: 0,
                seed: 9,
            },
        ]
    }

    #[test]
    fn csv_layout_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let meta = RunMeta { subcommand: "sinr-sweep", config_digest: "f00".into(), seed: 9 };
        write_sweep_csv(&path, &sample_rows(), &meta).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# polydet v"));
        assert_eq!(lines[1], "# config_sha256=f00 seed=9");
        assert_eq!(lines[2], SWEEP_HEADER);
        assert_eq!(lines[3], "-10,poly,2,3,0.125,0.01,0.35,100,9");
        assert_eq!(lines[4], "0,lmmse-asympt,0,all,nan,0,nan,0,9");
    }

    #[test]
    fn identical_rows_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let meta = RunMeta { subcommand: "ber-sweep", config_digest: "aa".into(), seed: 1 };
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        write_sweep_csv(&p1, &sample_rows(), &meta).unwrap();
        write_sweep_csv(&p2, &sample_rows(), &meta).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn gnuplot_scripts_mention_all_ranks() {
        let s = gnuplot_sinr_script("out.csv", &[2, 6]);
        assert!(s.contains("$3 == 2"));
        assert!(s.contains("$3 == 6"));
        assert!(s.contains("strcol(2) eq 'lmmse'"));
        let b = gnuplot_ber_script("out.csv", &[3]);
        assert!(b.contains("logscale y"));
        assert!(b.contains("$3 == 3"));
    }
}
