//! Ranking, precision-recall and average precision.
//!
//! `AP = Σₖ P(k)·Δr(k)` over the ranked list, where `P(k)` is the fraction of
//! relevant items in the top `k` and `Δr(k) = r(k) − r(k−1)` is non-zero only
//! at ranks holding a relevant item.

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ranked list has no relevant items")]
    NoRelevantItems,
    #[error("empty input")]
    EmptyInput,
    #[error("AP value {0} outside [0, 1]")]
    InvalidAp(f64),
    #[error("missing common categories: {}", .0.join(", "))]
    MissingCommonCategory(Vec<String>),
}

/// The six categories shared by every evaluated dataset, in report order.
pub const COMMON_CATEGORIES: [&str; 6] = ["fabric", "glass", "metal", "paper", "plastic", "wood"];

pub const DEFAULT_TOP_N: usize = 36;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredImage {
    pub image_id: String,
    pub score: f64,
    pub relevant: bool,
}

impl ScoredImage {
    pub fn new(image_id: impl Into<String>, score: f64, relevant: bool) -> Self {
        Self {
            image_id: image_id.into(),
            score,
            relevant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    /// 1-based rank.
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApReport {
    pub ap: f64,
    pub curve: PrCurve,
    pub ranked: Vec<ScoredImage>,
}

fn rank_order(a: &ScoredImage, b: &ScoredImage) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.image_id.cmp(&b.image_id))
}

/// Sorts by score descending, ties by image id ascending.
pub fn rank(mut items: Vec<ScoredImage>) -> Vec<ScoredImage> {
    items.sort_by(rank_order);
    items
}

impl PrCurve {
    /// One point per rank of an already ranked list.
    pub fn from_ranked(ranked: &[ScoredImage]) -> Self {
        let total = ranked.iter().filter(|s| s.relevant).count();
        let mut hits = 0usize;
        let points = ranked
            .iter()
            .enumerate()
            .map(|(i, item)| {
                if item.relevant {
                    hits += 1;
                }
                let k = i + 1;
                PrPoint {
                    k,
                    precision: hits as f64 / k as f64,
                    recall: if total == 0 { 0.0 } else { hits as f64 / total as f64 },
                }
            })
            .collect();
        Self { points }
    }

    /// `Σₖ P(k)·(r(k) − r(k−1))` with `r(0) = 0`.
    pub fn area(&self) -> f64 {
        let mut prev = 0.0;
        let mut sum = 0.0;
        for p in &self.points {
            let dr = p.recall - prev;
            if dr > 0.0 {
                sum += p.precision * dr;
            }
            prev = p.recall;
        }
        sum
    }

    /// CSV with header `k,precision,recall`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,precision,recall\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.k, p.precision, p.recall);
        }
        out
    }
}

/// AP of a rank-ordered list.
pub fn average_precision(ranked: &[ScoredImage]) -> Result<ApReport, EvalError> {
    if !ranked.iter().any(|s| s.relevant) {
        return Err(EvalError::NoRelevantItems);
    }
    let curve = PrCurve::from_ranked(ranked);
    Ok(ApReport {
        ap: curve.area(),
        curve,
        ranked: ranked.to_vec(),
    })
}

pub fn top_n(ranked: &[ScoredImage], n: usize) -> Vec<ScoredImage> {
    ranked[..n.min(ranked.len())].to_vec()
}

/// Unweighted mean of per-category AP values.
pub fn mean_ap<S: AsRef<str>>(per_category: &[(S, f64)]) -> Result<f64, EvalError> {
    if per_category.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if let Some((_, bad)) = per_category.iter().find(|(_, ap)| !(0.0..=1.0).contains(ap)) {
        return Err(EvalError::InvalidAp(*bad));
    }
    Ok(per_category.iter().map(|(_, ap)| ap).sum::<f64>() / per_category.len() as f64)
}

/// Keeps the six common categories in canonical order.
pub fn common_ground_filter<S: AsRef<str>>(results: &[(S, f64)]) -> Result<Vec<(String, f64)>, EvalError> {
    let mut kept = Vec::with_capacity(COMMON_CATEGORIES.len());
    let mut missing = Vec::new();
    for cat in COMMON_CATEGORIES {
        match results.iter().find(|(name, _)| name.as_ref() == cat) {
            Some((_, ap)) => kept.push((cat.to_owned(), *ap)),
            None => missing.push(cat.to_owned()),
        }
    }
    if missing.is_empty() {
        Ok(kept)
    } else {
        Err(EvalError::MissingCommonCategory(missing))
    }
}

/// CSV with header `category,ap`.
pub fn ap_summary_csv<S: AsRef<str>>(per_category: &[(S, f64)]) -> String {
    let mut out = String::from("category,ap\n");
    for (cat, ap) in per_category {
        let _ = writeln!(out, "{},{}", cat.as_ref(), ap);
    }
    out
}

/// `fraction * 100` with two decimals, halves rounded up.
pub fn format_percent(fraction: f64) -> String {
    let cents = fraction * 10_000.0;
    // Undo representation error before rounding so 86.015 renders as 86.02.
    let nudged = cents + cents.abs() * 1e-12;
    let rounded = nudged.round() / 100.0;
    format!("{rounded:.2}")
}
