//! Feature vectors, the `FVEC` text format and L2 normalization.
//!
//! ```text
//! FVEC <D> <count>
//! <image_id> <label> <v1> ... <vD>
//! ```
//!
//! Labels are `1`, `-1` or `0` (unlabeled). Floats are written with the
//! shortest decimal that round-trips, so `read(write(r)) == r` exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("records have mixed dimensions ({expected} and {found})")]
    MixedDimensions { expected: usize, found: usize },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in record `{0}`")]
    NonFinite(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FeatureError {
    fn from(e: std::io::Error) -> Self {
        FeatureError::Io(e.to_string())
    }
}

/// A descriptor of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub source_image: String,
}

impl FeatureVector {
    pub fn new(source_image: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            values,
            source_image: source_image.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordLabel {
    Positive,
    Negative,
    Unlabeled,
}

impl RecordLabel {
    fn token(self) -> &'static str {
        match self {
            RecordLabel::Positive => "1",
            RecordLabel::Negative => "-1",
            RecordLabel::Unlabeled => "0",
        }
    }

    fn parse(tok: &str) -> Option<Self> {
        match tok {
            "1" | "+1" => Some(RecordLabel::Positive),
            "-1" => Some(RecordLabel::Negative),
            "0" => Some(RecordLabel::Unlabeled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub image_id: String,
    pub label: RecordLabel,
    pub vector: FeatureVector,
}

impl FeatureRecord {
    pub fn new(image_id: impl Into<String>, label: RecordLabel, values: Vec<f64>) -> Self {
        let image_id = image_id.into();
        Self {
            vector: FeatureVector::new(image_id.clone(), values),
            image_id,
            label,
        }
    }
}

/// Appends `values` as space-separated shortest round-trip decimals.
pub(crate) fn push_floats(out: &mut String, values: &[f64]) {
    for v in values {
        // Display for f64 emits the shortest representation that parses back exactly.
        let _ = write!(out, " {v}");
    }
}

/// Parses one float token, rejecting NaN and infinities.
pub(crate) fn parse_finite(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn format_features(records: &[FeatureRecord]) -> Result<String, FeatureError> {
    let dim = records.first().map_or(0, |r| r.vector.dim());
    let mut out = format!("FVEC {dim} {}\n", records.len());
    for rec in records {
        if rec.vector.dim() != dim {
            return Err(FeatureError::MixedDimensions {
                expected: dim,
                found: rec.vector.dim(),
            });
        }
        if !rec.vector.is_finite() {
            return Err(FeatureError::NonFinite(rec.image_id.clone()));
        }
        out.push_str(&rec.image_id);
        out.push(' ');
        out.push_str(rec.label.token());
        push_floats(&mut out, &rec.vector.values);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `records` and returns the number of bytes emitted.
pub fn write_features<W: Write>(records: &[FeatureRecord], mut out: W) -> Result<usize, FeatureError> {
    let text = format_features(records)?;
    out.write_all(text.as_bytes())?;
    Ok(text.len())
}

pub fn read_features<R: BufRead>(reader: R) -> Result<Vec<FeatureRecord>, FeatureError> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, msg: &str| FeatureError::Parse {
        line,
        msg: msg.to_owned(),
    };

    let (dim, count) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(parse_err(1, "missing FVEC header"));
        };
        let line = line?;
        let toks: Vec<&str> = line.split(' ').collect();
        if line.is_empty() {
            continue;
        }
        match toks.as_slice() {
            ["FVEC", d, n] => match (d.parse::<usize>(), n.parse::<usize>()) {
                (Ok(d), Ok(n)) => break (d, n),
                _ => return Err(parse_err(idx + 1, "bad FVEC header counts")),
            },
            _ => return Err(parse_err(idx + 1, "expected `FVEC <D> <count>` header")),
        }
    };

    let mut records = Vec::with_capacity(count);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(' ').collect();
        if toks.len() < 2 || toks[0].is_empty() {
            return Err(parse_err(lineno, "expected `<image_id> <label> <values...>`"));
        }
        let label = RecordLabel::parse(toks[1])
            .ok_or_else(|| parse_err(lineno, &format!("invalid label `{}`", toks[1])))?;
        let values = toks[2..]
            .iter()
            .map(|t| parse_finite(t).ok_or_else(|| parse_err(lineno, &format!("invalid value `{t}`"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                line: lineno,
                expected: dim,
                found: values.len(),
            });
        }
        records.push(FeatureRecord::new(toks[0], label, values));
    }
    if records.len() != count {
        return Err(parse_err(
            1,
            &format!("header declares {count} records, found {}", records.len()),
        ));
    }
    Ok(records)
}

pub const NORMALIZE_EPS: f64 = 1e-12;

/// Scales `v` to unit L2 norm; vectors with norm <= 1e-12 are returned as-is.
pub fn l2_normalize(v: &FeatureVector) -> FeatureVector {
    let norm = v.norm();
    if norm > NORMALIZE_EPS {
        FeatureVector {
            values: v.values.iter().map(|x| x / norm).collect(),
            source_image: v.source_image.clone(),
        }
    } else {
        v.clone()
    }
}
