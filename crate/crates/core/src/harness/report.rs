//! CSV outputs: per-test plot data, summary rows and the table layouts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{HarnessError, ReportLayout, RunReport, Stage, StageError};
use crate::evaluation::{common_ground_filter, format_percent, mean_ap, EvalError, ScoredImage};

pub const PLOT_FILES: [&str; 4] = ["train_top36.csv", "train_pr.csv", "test_top36.csv", "test_pr.csv"];

const RESULT_FILE: &str = "result.csv";
const SUMMARY_FILE: &str = "summary.csv";

/// One line of `summary.csv`; APs are fractions in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub test_name: String,
    pub arch: String,
    pub dataset: String,
    pub category: String,
    pub train_ap: f64,
    pub test_ap: f64,
    pub minutes: f64,
}

impl From<&RunReport> for ResultRow {
    fn from(r: &RunReport) -> Self {
        Self {
            test_name: r.test_name.clone(),
            arch: r.arch.clone(),
            dataset: r.dataset.clone(),
            category: r.category.clone(),
            train_ap: r.train_ap.ap,
            test_ap: r.test_ap.ap,
            minutes: r.wall_minutes,
        }
    }
}

pub fn summary_header() -> &'static str {
    "test_name,arch,dataset,category,train_ap,test_ap,minutes"
}

/// Summary CSV; `minutes` is the last column so it can be cut off when
/// comparing runs.
pub fn summary_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{}\n", summary_header());
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.test_name, r.arch, r.dataset, r.category, r.train_ap, r.test_ap, r.minutes
        );
    }
    out
}

fn parse_summary(text: &str, origin: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let bad = |line: usize, msg: &str| {
        HarnessError::new(
            Stage::Output,
            StageError::Invalid(format!("{}:{line}: {msg}", origin.display())),
        )
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == summary_header() => {}
        _ => return Err(bad(1, "missing summary header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let [name, arch, dataset, category, train, test, minutes] = f[..] else {
            return Err(bad(i + 1, "expected 7 fields"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 1, &format!("bad number `{s}`")));
        rows.push(ResultRow {
            test_name: name.into(),
            arch: arch.into(),
            dataset: dataset.into(),
            category: category.into(),
            train_ap: num(train)?,
            test_ap: num(test)?,
            minutes: num(minutes)?,
        });
    }
    Ok(rows)
}

fn io_error(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::new(Stage::Output, StageError::Io(format!("{}: {e}", path.display())))
}

/// Reads `<dir>/summary.csv` if present, otherwise every
/// `<dir>/<test>/result.csv` in test-name order.
pub fn read_summaries(dir: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let summary = dir.join(SUMMARY_FILE);
    if summary.is_file() {
        let text = fs::read_to_string(&summary).map_err(|e| io_error(&summary, e))?;
        return parse_summary(&text, &summary);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .filter_map(|entry| Some(entry.ok()?.path().join(RESULT_FILE)))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| io_error(&f, e))?;
        rows.extend(parse_summary(&text, &f)?);
    }
    Ok(rows)
}

fn top_csv(items: &[ScoredImage]) -> String {
    let mut out = String::from("rank,image_id,score,relevant\n");
    for (i, s) in items.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i + 1, s.image_id, s.score, u8::from(s.relevant));
    }
    out
}

/// Writes the four plot-ready files into `dir`.
pub fn emit_plot_data(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let contents = [
        top_csv(&report.train_top36),
        report.train_ap.curve.to_csv(),
        top_csv(&report.test_top36),
        report.test_ap.curve.to_csv(),
    ];
    let mut written = Vec::with_capacity(PLOT_FILES.len());
    for (name, text) in PLOT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Plot data, the one-row `result.csv` and the trained model under
/// `<out_root>/<test_name>/`.
pub fn write_outputs(report: &RunReport, out_root: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = out_root.join(&report.test_name);
    let mut files = emit_plot_data(report, &dir)?;
    for (name, text) in [
        (RESULT_FILE, summary_csv(&[ResultRow::from(report)])),
        ("model.svm", report.model.to_text()),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

/// Distinct values in first-seen order.
fn distinct<'a>(values: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen: Vec<&str> = Vec::new();
    for v in values {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

/// Test APs of one (arch, dataset) cell; the first row wins for a repeated
/// category.
fn cell<'a>(rows: &'a [ResultRow], arch: &str, dataset: &str) -> Vec<(&'a str, f64)> {
    let mut out: Vec<(&str, f64)> = Vec::new();
    for r in rows.iter().filter(|r| r.arch == arch && r.dataset == dataset) {
        if !out.iter().any(|(c, _)| *c == r.category) {
            out.push((&r.category, r.test_ap));
        }
    }
    out
}

/// Renders test APs as a percentage table.
///
/// * `per-category-table`: one row per (dataset, arch), one column per category.
/// * `map-summary`: arch rows × dataset columns of mAP over all categories.
/// * `common-ground`: arch rows × dataset columns of the six-category mean.
pub fn emit_report(rows: &[ResultRow], layout: ReportLayout) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let archs = distinct(rows.iter().map(|r| r.arch.as_str()));
    let datasets = distinct(rows.iter().map(|r| r.dataset.as_str()));
    let mut out = String::new();
    match layout {
        ReportLayout::PerCategoryTable => {
            let cats = distinct(rows.iter().map(|r| r.category.as_str()));
            let _ = writeln!(out, "dataset,arch,{}", cats.join(","));
            for d in &datasets {
                for a in &archs {
                    let values = cell(rows, a, d);
                    if values.is_empty() {
                        continue;
                    }
                    let cols: Vec<String> = cats
                        .iter()
                        .map(|c| {
                            values
                                .iter()
                                .find(|(name, _)| name == c)
                                .map_or_else(String::new, |(_, ap)| format_percent(*ap))
                        })
                        .collect();
                    let _ = writeln!(out, "{d},{a},{}", cols.join(","));
                }
            }
        }
        ReportLayout::MapSummary | ReportLayout::CommonGround => {
            let _ = writeln!(out, "arch,{}", datasets.join(","));
            for a in &archs {
                let mut cols = Vec::with_capacity(datasets.len());
                for d in &datasets {
                    let values = cell(rows, a, d);
                    if values.is_empty() {
                        cols.push(String::new());
                        continue;
                    }
                    let m = if layout == ReportLayout::CommonGround {
                        mean_ap(&common_ground_filter(&values)?)?
                    } else {
                        mean_ap(&values)?
                    };
                    cols.push(format_percent(m));
                }
                let _ = writeln!(out, "{a},{}", cols.join(","));
            }
        }
    }
    Ok(out)
}
