//! Soft-margin linear SVM.
//!
//! Training minimizes `J(w, b) = ½‖w‖² + c·Σ max(0, 1 − yᵢ(w·hᵢ + b))` with an
//! unregularized bias. Two solvers are available:
//!
//! * [`Solver::Smo`] (default): sequential minimal optimization on the dual
//!   with second-order working-set selection. Stops when the maximal KKT
//!   violation drops below `tolerance`; an epoch is `max(n, 1000)` pair
//!   updates.
//! * [`Solver::Subgradient`]: epoch-wise stochastic subgradient descent with
//!   step `1 / (1 + epoch)`. Cheap, but converges slowly for large `c`.
//!
//! Both visit examples in a SplitMix64-shuffled order and return the
//! best-objective iterate seen, with its bias re-fitted exactly.

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use crate::features::{parse_finite, push_floats, FeatureVector};
use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("training data needs both labels")]
    SingleClassData,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite feature value in `{0}`")]
    NonFiniteFeature(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrainingLabel {
    Negative,
    Positive,
}

impl TrainingLabel {
    pub fn value(self) -> f64 {
        match self {
            TrainingLabel::Positive => 1.0,
            TrainingLabel::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Smo,
    Subgradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub solver: Solver,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            max_epochs: 200,
            tolerance: 1e-6,
            seed: 0,
            solver: Solver::Smo,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidConfig(format!("c = {} must be positive", self.c)));
        }
        if self.max_epochs == 0 {
            return Err(SvmError::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(SvmError::InvalidConfig(format!(
                "tolerance = {} must be positive",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Weight vector and bias; `score(h) = K(h, w) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Objective of the iterate at the end of each epoch.
    pub epoch_objective: Vec<f64>,
    /// Best objective seen up to and including each epoch; the last entry
    /// reflects the final bias re-fit.
    pub best_objective: Vec<f64>,
    pub converged: bool,
}

/// `K(h, h') = Σₖ hₖ·h'ₖ`.
pub fn linear_kernel(h: &[f64], h2: &[f64]) -> Result<f64, SvmError> {
    if h.len() != h2.len() {
        return Err(SvmError::DimensionMismatch {
            expected: h.len(),
            found: h2.len(),
        });
    }
    Ok(dot(h, h2))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, h: &FeatureVector) -> Result<f64, SvmError> {
        self.score_values(&h.values)
    }

    pub fn score_values(&self, h: &[f64]) -> Result<f64, SvmError> {
        Ok(linear_kernel(h, &self.weights)? + self.bias)
    }

    /// Renders the model file: `SVM <D>`, `bias <b>`, `w <v1> ... <vD>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "SVM {}", self.dim());
        let _ = writeln!(out, "bias {}", self.bias);
        out.push('w');
        push_floats(&mut out, &self.weights);
        out.push('\n');
        out
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, SvmError> {
        let lines: Vec<String> = reader
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| SvmError::Parse { line: 0, msg: e.to_string() })?;
        let err = |line: usize, msg: &str| SvmError::Parse {
            line,
            msg: msg.to_owned(),
        };
        let mut it = lines.iter().map(|l| l.split(' ').collect::<Vec<_>>());
        let dim = match it.next().as_deref() {
            Some(["SVM", d]) => d.parse::<usize>().map_err(|_| err(1, "bad dimension"))?,
            _ => return Err(err(1, "expected `SVM <D>` header")),
        };
        let bias = match it.next().as_deref() {
            Some(["bias", b]) => parse_finite(b).ok_or_else(|| err(2, "bad bias"))?,
            _ => return Err(err(2, "expected `bias <b>`")),
        };
        let weights = match it.next() {
            Some(toks) if toks.first() == Some(&"w") => toks[1..]
                .iter()
                .map(|t| parse_finite(t).ok_or_else(|| err(3, &format!("invalid value `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            _ => return Err(err(3, "expected `w <v1> ... <vD>`")),
        };
        if weights.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: weights.len(),
            });
        }
        if it.any(|toks| toks != [""]) {
            return Err(err(4, "trailing content after weights"));
        }
        Ok(Self { weights, bias })
    }
}

/// `score(model, h) = K(h, w) + b`.
pub fn score(model: &LinearModel, h: &FeatureVector) -> Result<f64, SvmError> {
    model.score(h)
}

pub fn hinge_objective(
    model: &LinearModel,
    data: &[(FeatureVector, TrainingLabel)],
    c: f64,
) -> Result<f64, SvmError> {
    let mut hinge = 0.0;
    for (h, y) in data {
        let s = model.score(h)?;
        hinge += (1.0 - y.value() * s).max(0.0);
    }
    Ok(0.5 * dot(&model.weights, &model.weights) + c * hinge)
}

struct Problem<'a> {
    xs: Vec<&'a [f64]>,
    ys: Vec<f64>,
    dim: usize,
}

impl Problem<'_> {
    fn objective(&self, w: &[f64], b: f64, c: f64) -> f64 {
        let hinge: f64 = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
            .sum();
        0.5 * dot(w, w) + c * hinge
    }

    /// Exact minimizer of the objective over `b` for fixed `w`. The hinge sum
    /// is piecewise linear in `b` with kinks at `yᵢ − w·xᵢ`, so its minimum
    /// sits on one of them; `start` wins ties.
    fn best_bias(&self, w: &[f64], start: f64) -> f64 {
        let scores: Vec<f64> = self.xs.iter().map(|x| dot(w, x)).collect();
        let hinge = |b: f64| -> f64 {
            scores
                .iter()
                .zip(&self.ys)
                .map(|(s, y)| (1.0 - y * (s + b)).max(0.0))
                .sum()
        };
        let mut best = (hinge(start), start);
        for (s, y) in scores.iter().zip(&self.ys) {
            let b = y - s;
            let h = hinge(b);
            if h < best.0 {
                best = (h, b);
            }
        }
        best.1
    }
}

fn prepare<'a>(data: &'a [(FeatureVector, TrainingLabel)], cfg: &TrainConfig) -> Result<Problem<'a>, SvmError> {
    cfg.validate()?;
    let dim = data.first().map_or(0, |(h, _)| h.dim());
    let mut has_pos = false;
    let mut has_neg = false;
    for (h, y) in data {
        if h.dim() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: h.dim(),
            });
        }
        if !h.is_finite() {
            return Err(SvmError::NonFiniteFeature(h.source_image.clone()));
        }
        match y {
            TrainingLabel::Positive => has_pos = true,
            TrainingLabel::Negative => has_neg = true,
        }
    }
    if !(has_pos && has_neg) {
        return Err(SvmError::SingleClassData);
    }
    // Visit order is a seeded permutation of the input.
    let mut order: Vec<usize> = (0..data.len()).collect();
    SplitMix64::new(cfg.seed).shuffle(&mut order);
    Ok(Problem {
        xs: order.iter().map(|&i| data[i].0.values.as_slice()).collect(),
        ys: order.iter().map(|&i| data[i].1.value()).collect(),
        dim,
    })
}

pub fn train_linear_svm(data: &[(FeatureVector, TrainingLabel)], cfg: &TrainConfig) -> Result<LinearModel, SvmError> {
    train_with_trace(data, cfg).map(|(m, _)| m)
}

pub fn train_with_trace(
    data: &[(FeatureVector, TrainingLabel)],
    cfg: &TrainConfig,
) -> Result<(LinearModel, TrainTrace), SvmError> {
    let problem = prepare(data, cfg)?;
    Ok(match cfg.solver {
        Solver::Smo => smo(&problem, cfg),
        Solver::Subgradient => subgradient(&problem, cfg),
    })
}

/// Tracks the best iterate and the per-epoch trace.
struct Best {
    model: LinearModel,
    objective: f64,
    trace: TrainTrace,
}

impl Best {
    fn new(dim: usize, objective: f64) -> Self {
        Self {
            model: LinearModel::zeros(dim),
            objective,
            trace: TrainTrace {
                epoch_objective: Vec::new(),
                best_objective: Vec::new(),
                converged: false,
            },
        }
    }

    fn record(&mut self, w: &[f64], b: f64, objective: f64) {
        if objective < self.objective {
            self.objective = objective;
            self.model = LinearModel {
                weights: w.to_vec(),
                bias: b,
            };
        }
        self.trace.epoch_objective.push(objective);
        self.trace.best_objective.push(self.objective);
    }

    /// Re-fits the bias of the best iterate exactly, then closes the trace.
    fn finish(mut self, p: &Problem<'_>, c: f64, converged: bool) -> (LinearModel, TrainTrace) {
        let b = p.best_bias(&self.model.weights, self.model.bias);
        let objective = p.objective(&self.model.weights, b, c);
        if objective < self.objective {
            self.model.bias = b;
            self.objective = objective;
            if let Some(last) = self.trace.best_objective.last_mut() {
                *last = objective;
            }
        }
        let mut trace = self.trace;
        trace.converged = converged;
        (self.model, trace)
    }
}

const TAU: f64 = 1e-12;

/// Minimum number of pair updates per SMO epoch; tiny problems can need far
/// more than `n` updates per epoch to converge.
const SMO_MIN_SWEEP: usize = 1000;

fn smo(p: &Problem<'_>, cfg: &TrainConfig) -> (LinearModel, TrainTrace) {
    let n = p.xs.len();
    let c = cfg.c;
    let diag: Vec<f64> = p.xs.iter().map(|x| dot(x, x)).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; p.dim];
    // grad[t] = y_t (w·x_t) − 1, the gradient of the dual objective.
    let mut grad = vec![-1.0; n];
    let mut best = Best::new(p.dim, p.objective(&w, 0.0, c));

    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut converged = false;
    'epochs: for _ in 0..cfg.max_epochs {
        for _ in 0..n.max(SMO_MIN_SWEEP) {
            // First index: maximal violator in I_up.
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..n {
                if in_up(alpha[t], p.ys[t]) && -p.ys[t] * grad[t] >= gmax {
                    gmax = -p.ys[t] * grad[t];
                    i = t;
                }
            }
            // Second index: largest second-order decrease in I_low.
            let mut gmax2 = f64::NEG_INFINITY;
            let mut obj_min = f64::INFINITY;
            let mut j = usize::MAX;
            if i != usize::MAX {
                for t in 0..n {
                    if !in_low(alpha[t], p.ys[t]) {
                        continue;
                    }
                    let yg = p.ys[t] * grad[t];
                    gmax2 = gmax2.max(yg);
                    let diff = gmax + yg;
                    if diff > 0.0 {
                        let mut quad = diag[i] + diag[t] - 2.0 * dot(p.xs[i], p.xs[t]);
                        if quad <= 0.0 {
                            quad = TAU;
                        }
                        let obj = -(diff * diff) / quad;
                        if obj <= obj_min {
                            obj_min = obj;
                            j = t;
                        }
                    }
                }
            }
            if j == usize::MAX || gmax + gmax2 < cfg.tolerance {
                converged = true;
                break 'epochs;
            }

            let (yi, yj) = (p.ys[i], p.ys[j]);
            let kij = dot(p.xs[i], p.xs[j]);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            if yi != yj {
                let mut quad = diag[i] + diag[j] + 2.0 * (yi * yj * kij);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let mut quad = diag[i] + diag[j] - 2.0 * (yi * yj * kij);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }

            let (di, dj) = ((alpha[i] - old_i) * yi, (alpha[j] - old_j) * yj);
            for ((wk, xi), xj) in w.iter_mut().zip(p.xs[i]).zip(p.xs[j]) {
                *wk += di * xi + dj * xj;
            }
            for t in 0..n {
                grad[t] = p.ys[t] * dot(&w, p.xs[t]) - 1.0;
            }
        }
        let b = smo_bias(&alpha, &grad, &p.ys, c);
        best.record(&w, b, p.objective(&w, b, c));
    }
    let b = smo_bias(&alpha, &grad, &p.ys, c);
    best.record(&w, b, p.objective(&w, b, c));
    best.finish(p, c, converged)
}

/// Bias from the free support vectors, or the midpoint of the feasible
/// interval when every multiplier sits at a bound.
fn smo_bias(alpha: &[f64], grad: &[f64], ys: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for ((&a, &g), &y) in alpha.iter().zip(grad).zip(ys) {
        let yg = y * g;
        if a >= c {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a <= 0.0 {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            free += 1;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    -rho
}

fn subgradient(p: &Problem<'_>, cfg: &TrainConfig) -> (LinearModel, TrainTrace) {
    let n = p.xs.len();
    let nf = n as f64;
    let c = cfg.c;
    let mut w = vec![0.0; p.dim];
    let mut b = 0.0;
    let mut best = Best::new(p.dim, p.objective(&w, b, c));
    let mut prev = best.objective;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut converged = false;

    for epoch in 0..cfg.max_epochs {
        rng.shuffle(&mut order);
        let eta = 1.0 / (1.0 + epoch as f64);
        for &i in &order {
            let (x, y) = (p.xs[i], p.ys[i]);
            let violated = y * (dot(&w, x) + b) < 1.0;
            // Subgradient of J / n at example i.
            for (wk, xk) in w.iter_mut().zip(x) {
                let g = *wk / nf - if violated { c * y * xk } else { 0.0 };
                *wk -= eta * g;
            }
            if violated {
                b += eta * c * y;
            }
        }
        let obj = p.objective(&w, b, c);
        best.record(&w, b, obj);
        if (prev - obj).abs() < cfg.tolerance {
            converged = true;
            break;
        }
        prev = obj;
    }
    best.finish(p, c, converged)
}
