//! CSV and JSON report files.
//!
//! * `trials.csv`: `seed,filter,rmse,mean_step_ms,mean_iters,diverged`, one row per
//!   trial; `rmse` is empty for diverged trials.
//! * `summary.json`: [`BenchSummary`] with alphabetically ordered keys.
//! * `errors_<filter>.csv`: `step,abs_err_0,..`, the per-step mean absolute error of
//!   each state coordinate over the non-diverged trials.
//! * `timing.csv`: `filter,mean_step_ms,mean_iters,trials`.
//!
//! Floats are written with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{BenchError, Result};
use crate::harness::{BenchSummary, TrialResult};
use crate::stats;

pub const TRIALS_HEADER: &str = "seed,filter,rmse,mean_step_ms,mean_iters,diverged";
pub const TIMING_HEADER: &str = "filter,mean_step_ms,mean_iters,trials";

/// `x` with 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes through `serde_json::Value`, whose maps are ordered by key.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("summary serializes");
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory write");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8 json")
}

pub fn trials_csv(results: &[TrialResult]) -> String {
    let mut s = String::from(TRIALS_HEADER);
    s.push('\n');
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.seed,
            r.filter,
            r.rmse.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.mean_step_ms()),
            fmt_f64(r.mean_iters),
            r.diverged
        );
    }
    s
}

fn filters_in(results: &[TrialResult]) -> BTreeMap<&str, Vec<&TrialResult>> {
    let mut groups: BTreeMap<&str, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.filter.as_str()).or_default().push(r);
    }
    groups
}

/// Per-step mean absolute error for one filter's trials.
pub fn errors_csv(trials: &[&TrialResult]) -> String {
    let ok: Vec<&TrialResult> = trials.iter().copied().filter(|r| !r.diverged).collect();
    let dims = ok.first().and_then(|r| r.errors.first()).map_or(0, |e| e.len());
    let steps = ok.iter().map(|r| r.errors.len()).min().unwrap_or(0);
    let mut s = String::from("step");
    for i in 0..dims {
        let _ = write!(s, ",abs_err_{i}");
    }
    s.push('\n');
    for t in 0..steps {
        let _ = write!(s, "{}", t + 1);
        for i in 0..dims {
            let column: Vec<f64> = ok.iter().map(|r| r.errors[t][i].abs()).collect();
            let _ = write!(s, ",{}", fmt_f64(stats::mean(&column)));
        }
        s.push('\n');
    }
    s
}

pub fn timing_csv(summary: &BenchSummary) -> String {
    let mut s = String::from(TIMING_HEADER);
    s.push('\n');
    for (name, f) in &summary.filters {
        let _ = writeln!(
            s,
            "{name},{},{},{}",
            fmt_f64(f.mean_step_ms),
            fmt_f64(f.mean_iters),
            f.trials
        );
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

/// Writes all report files into `out_dir`, creating it if needed.
pub fn emit_report(summary: &BenchSummary, results: &[TrialResult], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    write(&out_dir.join("trials.csv"), &trials_csv(results))?;
    write(&out_dir.join("summary.json"), &to_json(summary))?;
    for (name, trials) in filters_in(results) {
        write(&out_dir.join(format!("errors_{name}.csv")), &errors_csv(&trials))?;
    }
    write(&out_dir.join("timing.csv"), &timing_csv(summary))
}

/// One parsed row of `trials.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub filter: String,
    pub rmse: Option<f64>,
    pub mean_step_ms: f64,
    pub mean_iters: f64,
    pub diverged: bool,
}

pub fn parse_trials_csv(text: &str, path: &Path) -> Result<Vec<TrialRow>> {
    let bad = |reason: String| BenchError::Report {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next() != Some(TRIALS_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let row = i + 2;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(format!("line {row}: expected 6 columns")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("line {row}: {e}")));
            Ok(TrialRow {
                seed: cols[0].parse().map_err(|e| bad(format!("line {row}: {e}")))?,
                filter: cols[1].to_string(),
                rmse: if cols[2].is_empty() { None } else { Some(num(cols[2])?) },
                mean_step_ms: num(cols[3])?,
                mean_iters: num(cols[4])?,
                diverged: cols[5].parse().map_err(|e| bad(format!("line {row}: {e}")))?,
            })
        })
        .collect()
}

pub fn load_trials(dir: &Path) -> Result<Vec<TrialRow>> {
    let path = dir.join("trials.csv");
    let text = fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    parse_trials_csv(&text, &path)
}

/// Plain-text RMSE table, one line per filter.
pub fn render_table(rows: &[TrialRow]) -> String {
    let mut groups: BTreeMap<&str, Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.filter).or_default().push(r);
    }
    let mut s = format!(
        "{:<6} {:>6} {:>8} {:>12} {:>12} {:>12} {:>12} {:>10}\n",
        "filter", "trials", "diverged", "mean_rmse", "median_rmse", "q1", "q3", "step_ms"
    );
    for (name, rows) in groups {
        let rmses: Vec<f64> = rows.iter().filter(|r| !r.diverged).filter_map(|r| r.rmse).collect();
        let step: Vec<f64> = rows.iter().map(|r| r.mean_step_ms).collect();
        let diverged = rows.iter().filter(|r| r.diverged).count();
        let (mean, median, q1, q3) = stats::summarize(&rmses)
            .map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |x| (x.mean, x.median, x.q1, x.q3));
        let _ = writeln!(
            s,
            "{name:<6} {:>6} {diverged:>8} {mean:>12.6} {median:>12.6} {q1:>12.6} {q3:>12.6} {:>10.4}",
            rows.len(),
            stats::mean(&step)
        );
    }
    s
}
