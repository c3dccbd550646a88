//! Parallel batch execution and timing aggregation.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use super::{run_test, HarnessError, ResultRow, RunReport, Stage, StageError, TestSpec};

#[derive(Debug)]
pub struct BatchResult {
    /// One entry per plan item, in plan order.
    pub results: Vec<Result<RunReport, HarnessError>>,
    pub timing: TimingTable,
}

impl BatchResult {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.is_err()).count()
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.results.iter().flatten().map(ResultRow::from).collect()
    }
}

/// Runs the plan on up to `parallelism` worker threads. A failing test is
/// recorded and the rest of the batch continues.
pub fn run_batch(plan: &[TestSpec], parallelism: usize) -> Result<BatchResult, HarnessError> {
    if plan.is_empty() {
        return Err(HarnessError::new(Stage::Config, StageError::Invalid("empty plan".into())));
    }
    let workers = parallelism.clamp(1, plan.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = plan.get(i) else { break };
                if tx.send((i, run_test(spec))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut slots: Vec<Option<Result<RunReport, HarnessError>>> = (0..plan.len()).map(|_| None).collect();
    for (i, r) in rx {
        slots[i] = Some(r);
    }
    let results: Vec<_> = slots
        .into_iter()
        .map(|r| r.expect("every plan item reports exactly once"))
        .collect();
    let timing = TimingTable::from_rows(
        results
            .iter()
            .flatten()
            .map(|r| (r.arch.clone(), r.dataset.clone(), r.wall_minutes)),
    );
    Ok(BatchResult { results, timing })
}

/// Minutes per (arch, dataset) with dataset, arch and grand totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingTable {
    pub rows: Vec<(String, String, f64)>,
}

impl TimingTable {
    pub fn from_rows(rows: impl IntoIterator<Item = (String, String, f64)>) -> Self {
        Self {
            rows: rows.into_iter().collect(),
        }
    }

    pub fn from_results(rows: &[ResultRow]) -> Self {
        Self::from_rows(rows.iter().map(|r| (r.arch.clone(), r.dataset.clone(), r.minutes)))
    }

    pub fn push(&mut self, arch: &str, dataset: &str, minutes: f64) {
        self.rows.push((arch.to_owned(), dataset.to_owned(), minutes));
    }

    fn keys(&self, pick: impl Fn(&(String, String, f64)) -> &str) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.rows {
            let k = pick(r);
            if !seen.iter().any(|s| s == k) {
                seen.push(k.to_owned());
            }
        }
        seen
    }

    /// Architectures in first-seen order.
    pub fn archs(&self) -> Vec<String> {
        self.keys(|r| &r.0)
    }

    /// Datasets in first-seen order.
    pub fn datasets(&self) -> Vec<String> {
        self.keys(|r| &r.1)
    }

    /// Sum over all rows of one (arch, dataset) pair; `None` if there are none.
    pub fn cell(&self, arch: &str, dataset: &str) -> Option<f64> {
        let mut hits = self.rows.iter().filter(|r| r.0 == arch && r.1 == dataset).peekable();
        hits.peek()?;
        Some(hits.map(|r| r.2).sum())
    }

    pub fn dataset_total(&self, dataset: &str) -> f64 {
        self.rows.iter().filter(|r| r.1 == dataset).map(|r| r.2).sum()
    }

    pub fn arch_total(&self, arch: &str) -> f64 {
        self.rows.iter().filter(|r| r.0 == arch).map(|r| r.2).sum()
    }

    pub fn dataset_totals(&self) -> Vec<(String, f64)> {
        self.datasets()
            .into_iter()
            .map(|d| {
                let t = self.dataset_total(&d);
                (d, t)
            })
            .collect()
    }

    /// Sum of the per-dataset totals.
    pub fn grand_total(&self) -> f64 {
        self.dataset_totals().iter().map(|(_, t)| t).sum()
    }

    /// Arch rows × dataset columns plus a `total` column and a `TOTAL` row.
    pub fn to_csv(&self) -> String {
        let datasets = self.datasets();
        let mut out = format!("arch,{},total\n", datasets.join(","));
        for a in self.archs() {
            let cells: Vec<String> = datasets
                .iter()
                .map(|d| self.cell(&a, d).map_or_else(String::new, |m| m.to_string()))
                .collect();
            let _ = writeln!(out, "{a},{},{}", cells.join(","), self.arch_total(&a));
        }
        let totals: Vec<String> = self.dataset_totals().iter().map(|(_, t)| t.to_string()).collect();
        let _ = writeln!(out, "TOTAL,{},{}", totals.join(","), self.grand_total());
        out
    }
}
