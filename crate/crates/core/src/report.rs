//! CSV and JSON artifacts.
//!
//! Reals are printed in Rust's shortest round-trip form, complex numbers as
//! separate real columns. Column orders are fixed:
//!
//! - `periodic_points.csv`: n, re, im, mult_re, mult_im, log_abs_multiplier, primitive_period, residual, stability
//! - `pressure_pp.csv`: n, count_filtered, count_total, log_qp, value_n, fallback_used
//! - `pressure_sep.csv`: epsilon, n, set_size, pool_size, log_sum, value_n, raw_n
//! - `compare.csv`: n, periodic, separated, difference, separated_plus_slack, inequality_holds
//! - `bowen_sweep.csv`: c_re, c_im, t_star, n_used

use crate::bowen::SweepEntry;
use crate::config::Format;
use crate::periodic::{PeriodicSet, Stability};
use crate::pressure::PressureEstimate;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

/// Allowance in the check `(1/n) ln Q_P <= separated estimate + slack`.
pub const INEQUALITY_SLACK: f64 = 0.1;

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Repelling => "repelling",
        Stability::NonRepelling => "non-repelling",
        Stability::Ambiguous => "ambiguous",
    }
}

pub fn points_csv(sets: &[&PeriodicSet]) -> String {
    let mut out = String::from("n,re,im,mult_re,mult_im,log_abs_multiplier,primitive_period,residual,stability\n");
    for set in sets {
        for p in &set.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.period,
                p.z.re,
                p.z.im,
                p.multiplier.re,
                p.multiplier.im,
                p.log_abs_multiplier,
                p.primitive_period,
                p.residual,
                stability_name(p.classify())
            );
        }
    }
    out
}

pub fn pp_csv(est: &PressureEstimate) -> String {
    let mut out = String::from("n,count_filtered,count_total,log_qp,value_n,fallback_used\n");
    for e in &est.series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.n, e.count_filtered, e.count_total, e.log_sum, e.value_n, e.fallback_used
        );
    }
    out
}

pub fn sep_csv(estimates: &[PressureEstimate]) -> String {
    let mut out = String::from("epsilon,n,set_size,pool_size,log_sum,value_n,raw_n\n");
    for est in estimates {
        let eps = est.diagnostics.epsilon.unwrap_or(f64::NAN);
        for e in &est.series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                eps, e.n, e.count_filtered, e.count_total, e.log_sum, e.value_n, e.raw_n
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n: usize,
    pub periodic: f64,
    pub separated: f64,
    pub difference: f64,
    pub separated_plus_slack: f64,
    pub inequality_holds: bool,
}

/// Pairs the two series by `n`.
pub fn compare_rows(pp: &PressureEstimate, sep: &PressureEstimate) -> Vec<CompareRow> {
    pp.series
        .iter()
        .filter_map(|a| {
            let b = sep.series.iter().find(|b| b.n == a.n)?;
            let bound = b.value_n + INEQUALITY_SLACK;
            Some(CompareRow {
                n: a.n,
                periodic: a.value_n,
                separated: b.value_n,
                difference: (a.value_n - b.value_n).abs(),
                separated_plus_slack: bound,
                inequality_holds: a.value_n <= bound,
            })
        })
        .collect()
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("n,periodic,separated,difference,separated_plus_slack,inequality_holds\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n, r.periodic, r.separated, r.difference, r.separated_plus_slack, r.inequality_holds
        );
    }
    out
}

pub const SWEEP_HEADER: &str = "c_re,c_im,t_star,n_used\n";

pub fn sweep_rows(entries: &[SweepEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{},{},{},{}", e.c_re, e.c_im, e.t_star, e.n_used);
    }
    out
}

/// Machine-readable record of everything a run warned about.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub command: String,
    pub status: String,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

/// Writes artifacts of the requested formats into one directory.
#[derive(Debug, Clone)]
pub struct ArtifactWriter {
    dir: PathBuf,
    formats: Vec<Format>,
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>, formats: &[Format]) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            formats: formats.to_vec(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&self, name: &str, content: &str) -> io::Result<()> {
        if self.formats.contains(&Format::Csv) {
            fs::write(self.dir.join(name), content)?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<()> {
        if self.formats.contains(&Format::Json) {
            self.json_always(name, value)?;
        }
        Ok(())
    }

    /// JSON written regardless of the format selection (diagnostics).
    pub fn json_always<T: Serialize>(&self, name: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)
    }

    /// Appends rows, writing `header` first when the file is new.
    pub fn append_csv(&self, name: &str, header: &str, rows: &str) -> io::Result<()> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let fresh = !path.exists();
        let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            file.write_all(header.as_bytes())?;
        }
        file.write_all(rows.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::{Diagnostics, Method, SeriesEntry};

    fn estimate(values: &[f64], method: Method) -> PressureEstimate {
        PressureEstimate {
            value: values[values.len() - 1],
            series: values
                .iter()
                .enumerate()
                .map(|(i, &v)| SeriesEntry {
                    n: i + 1,
                    count_filtered: 1,
                    count_total: 2,
                    log_sum: v * (i + 1) as f64,
                    value_n: v,
                    raw_n: v,
                    fallback_used: false,
                })
                .collect(),
            method,
            window: 1,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn pp_csv_columns() {
        let csv = pp_csv(&estimate(&[0.5, 0.25], Method::PeriodicPoint));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,count_filtered,count_total,log_qp,value_n,fallback_used");
        assert_eq!(lines[1], "1,1,2,0.5,0.5,false");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn floats_roundtrip_through_csv() {
        let v = 0.1 + 0.2;
        let csv = pp_csv(&estimate(&[v], Method::PeriodicPoint));
        let field = csv.lines().nth(1).unwrap().split(',').nth(4).unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn compare_checks_inequality() {
        let pp = estimate(&[0.7, 0.9], Method::PeriodicPoint);
        let sep = estimate(&[0.65, 0.7], Method::SeparatedSet);
        let rows = compare_rows(&pp, &sep);
        assert!(rows[0].inequality_holds);
        assert!(!rows[1].inequality_holds);
        assert!((rows[1].difference - 0.2).abs() < 1e-12);
    }

    #[test]
    fn writer_respects_formats() {
        let dir = tempfile::tempdir().unwrap();
        let w = ArtifactWriter::new(dir.path(), &[Format::Json]).unwrap();
        w.csv("a.csv", "x\n").unwrap();
        w.json("a.json", &vec![1, 2]).unwrap();
        assert!(!dir.path().join("a.csv").exists());
        assert!(dir.path().join("a.json").exists());
    }

    #[test]
    fn append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let w = ArtifactWriter::new(dir.path(), &[Format::Csv]).unwrap();
        w.append_csv("s.csv", SWEEP_HEADER, "1,0,1,8\n").unwrap();
        w.append_csv("s.csv", SWEEP_HEADER, "2,0,1,8\n").unwrap();
        let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(text, "c_re,c_im,t_star,n_used\n1,0,1,8\n2,0,1,8\n");
    }
}
