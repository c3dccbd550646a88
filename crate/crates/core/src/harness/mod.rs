//! End-to-end test runner, batch execution and report emission.
//!
//! One test = one (architecture, dataset, category) triple: split the
//! manifest, extract or ingest features, train the SVM on the train sets,
//! rank train and test sets separately and compute both AP reports.

mod batch;
mod cli;
mod image;
mod report;
mod toy;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::dataset::{build_split, load_manifest, DatasetError, ImageRef, SplitPlan};
use crate::evaluation::{average_precision, rank, top_n, ApReport, EvalError, ScoredImage, DEFAULT_TOP_N};
use crate::features::{l2_normalize, read_features, FeatureError, FeatureVector};
use crate::network::{extract_patch, preset, resize_bilinear, ImageTensor, Network, NetworkError, NetworkSpec, Shape, Tensor};
use crate::svm::{train_linear_svm, LinearModel, SvmError, TrainConfig, TrainingLabel};

pub use batch::{run_batch, BatchResult, TimingTable};
pub use cli::{parse_plan, Cli, Command, ReportLayout, RunArgs};
pub use toy::write_toy_dataset;
pub use image::{decode_pnm, encode_pnm, load_toy_image, save_toy_image, ImageError};
pub use report::{
    emit_plot_data, emit_report, read_summaries, summary_csv, summary_header, write_outputs, ResultRow, PLOT_FILES,
};

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Manifest,
    Split,
    Network,
    Features,
    Train,
    Evaluate,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Manifest => "manifest",
            Stage::Split => "split",
            Stage::Network => "network",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("no feature for image `{0}`")]
    MissingFeature(String),
    #[error("{0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq)]
#[error("[{stage}] {source}")]
pub struct HarnessError {
    pub stage: Stage,
    pub source: StageError,
}

impl HarnessError {
    pub fn new(stage: Stage, source: impl Into<StageError>) -> Self {
        Self {
            stage,
            source: source.into(),
        }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, HarnessError>;
}

impl<T, E: Into<StageError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, HarnessError> {
        self.map_err(|e| HarnessError::new(stage, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    /// Pixel coordinates, x = column.
    pub center: (f64, f64),
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSpec {
    /// Preset name or path to a network spec file. With `features_in` it is
    /// only a label.
    pub arch: String,
    pub dataset: PathBuf,
    pub category: String,
    pub test_name: String,
    pub seed: u64,
    pub c: f64,
    pub patch: Option<PatchSpec>,
    pub normalize: bool,
    pub features_in: Option<PathBuf>,
    pub negative_fraction: f64,
}

impl TestSpec {
    pub fn new(arch: &str, dataset: impl Into<PathBuf>, category: &str, test_name: &str) -> Self {
        Self {
            arch: arch.to_owned(),
            dataset: dataset.into(),
            category: category.to_owned(),
            test_name: test_name.to_owned(),
            seed: 0,
            c: TrainConfig::default().c,
            patch: None,
            normalize: true,
            features_in: None,
            negative_fraction: 0.1,
        }
    }

    /// Label used in reports: the preset name, or the spec file stem.
    pub fn arch_label(&self) -> String {
        if preset(&self.arch, 0).is_some() {
            return self.arch.clone();
        }
        Path::new(&self.arch)
            .file_stem()
            .map_or_else(|| self.arch.clone(), |s| s.to_string_lossy().into_owned())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |msg: String| HarnessError::new(Stage::Config, StageError::Invalid(msg));
        if !is_filesystem_safe(&self.test_name) {
            return Err(invalid(format!("test name `{}` is not filesystem-safe", self.test_name)));
        }
        if let Some(p) = &self.patch {
            if self.features_in.is_some() {
                return Err(invalid("--patch needs the network engine, not --features-in".into()));
            }
            if !(p.scale > 0.0 && p.scale <= 1.0) {
                return Err(invalid(format!("patch scale {} outside (0, 1]", p.scale)));
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid(format!("c = {} must be positive", self.c)));
        }
        Ok(())
    }
}

pub fn is_filesystem_safe(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '-' | '_' | '.'))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub test_name: String,
    pub arch: String,
    pub dataset: String,
    pub category: String,
    pub train_ap: ApReport,
    pub test_ap: ApReport,
    pub train_top36: Vec<ScoredImage>,
    pub test_top36: Vec<ScoredImage>,
    pub model: LinearModel,
    /// Wall time of the whole `run_test` span.
    pub wall_minutes: f64,
}

/// Key under which an image's feature is looked up: `source/image_id`.
pub fn image_key(r: &ImageRef) -> String {
    format!("{}/{}", r.source, r.image_id)
}

enum FeatureSource {
    Engine {
        network: Network,
        image_root: PathBuf,
        patch: Option<PatchSpec>,
    },
    /// FVEC records keyed by image id; `source/id` keys take precedence.
    Ingested(HashMap<String, FeatureVector>),
}

impl FeatureSource {
    fn feature(&self, r: &ImageRef) -> Result<FeatureVector, HarnessError> {
        match self {
            FeatureSource::Ingested(map) => map
                .get(&image_key(r))
                .or_else(|| map.get(&r.image_id))
                .cloned()
                .ok_or_else(|| HarnessError::new(Stage::Features, StageError::MissingFeature(image_key(r)))),
            FeatureSource::Engine {
                network,
                image_root,
                patch,
            } => {
                let path = find_image(image_root, r)
                    .ok_or_else(|| HarnessError::new(Stage::Features, StageError::MissingFeature(image_key(r))))?;
                let image = load_toy_image(&path).at(Stage::Features)?;
                let input = fit_to_input(&image, network.spec().input_shape, *patch).at(Stage::Network)?;
                network.forward(&input, &image_key(r)).at(Stage::Network)
            }
        }
    }
}

/// Looks for `<root>/<source>/<image_id>.ppm`, then `.pgm`.
pub fn find_image(root: &Path, r: &ImageRef) -> Option<PathBuf> {
    ["ppm", "pgm"]
        .iter()
        .map(|ext| root.join(&r.source).join(format!("{}.{ext}", r.image_id)))
        .find(|p| p.is_file())
}

/// Crops the patch (if any), resizes to the network input and adapts the
/// channel count (gray is replicated, RGB averaged to gray).
pub fn fit_to_input(image: &ImageTensor, input: Shape, patch: Option<PatchSpec>) -> Result<ImageTensor, NetworkError> {
    let resized = match patch {
        Some(p) => extract_patch(image, p.center, p.scale, input.h, input.w)?,
        None if image.shape().h == input.h && image.shape().w == input.w => image.clone(),
        None => resize_bilinear(image, input.h, input.w),
    };
    let s = resized.shape();
    match (s.c, input.c) {
        (a, b) if a == b => Ok(resized),
        (1, n) => Ok(Tensor::from_fn(Shape::new(s.h, s.w, n), |y, x, _| resized.get(y, x, 0))),
        (n, 1) => Ok(Tensor::from_fn(Shape::new(s.h, s.w, 1), |y, x, _| {
            (0..n).map(|c| resized.get(y, x, c)).sum::<f64>() / n as f64
        })),
        _ => Err(NetworkError::ShapeMismatch {
            expected: input,
            found: s,
        }),
    }
}

fn resolve_network(spec: &TestSpec) -> Result<NetworkSpec, HarnessError> {
    if let Some(p) = preset(&spec.arch, spec.seed) {
        return Ok(p);
    }
    let text = fs::read_to_string(&spec.arch).map_err(|e| {
        HarnessError::new(
            Stage::Network,
            StageError::Io(format!("`{}` is neither a preset nor a readable spec file: {e}", spec.arch)),
        )
    })?;
    NetworkSpec::parse(&spec.arch_label(), &text, spec.seed).at(Stage::Network)
}

fn open(path: &Path, stage: Stage) -> Result<BufReader<fs::File>, HarnessError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::new(stage, StageError::Io(format!("{}: {e}", path.display()))))
}

fn scored(
    source: &FeatureSource,
    model: &LinearModel,
    refs: &[(&ImageRef, bool)],
    normalize: bool,
) -> Result<Vec<ScoredImage>, HarnessError> {
    refs.iter()
        .map(|(r, relevant)| {
            let f = prepare(source.feature(r)?, normalize);
            let s = model.score(&f).at(Stage::Evaluate)?;
            Ok(ScoredImage::new(image_key(r), s, *relevant))
        })
        .collect()
}

fn prepare(f: FeatureVector, normalize: bool) -> FeatureVector {
    if normalize {
        l2_normalize(&f)
    } else {
        f
    }
}

fn tagged(refs: &[ImageRef], relevant: bool) -> impl Iterator<Item = (&ImageRef, bool)> {
    refs.iter().map(move |r| (r, relevant))
}

/// Images paired with their relevance to the evaluated category.
type Tagged<'a> = Vec<(&'a ImageRef, bool)>;

fn labeled(plan: &SplitPlan) -> (Tagged<'_>, Tagged<'_>) {
    let train = tagged(&plan.pos_train, true).chain(tagged(&plan.neg_train, false)).collect();
    let test = tagged(&plan.pos_test, true).chain(tagged(&plan.neg_test, false)).collect();
    (train, test)
}

pub fn run_test(spec: &TestSpec) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    spec.validate()?;

    let manifest = load_manifest(open(&spec.dataset, Stage::Manifest)?).at(Stage::Manifest)?;
    let plan = build_split(&manifest, &spec.category, spec.negative_fraction).at(Stage::Split)?;

    let source = match &spec.features_in {
        Some(path) => {
            let records = read_features(open(path, Stage::Features)?).at(Stage::Features)?;
            FeatureSource::Ingested(records.into_iter().map(|r| (r.image_id, r.vector)).collect())
        }
        None => FeatureSource::Engine {
            network: Network::build(&resolve_network(spec)?).at(Stage::Network)?,
            image_root: spec
                .dataset
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default(),
            patch: spec.patch,
        },
    };

    let (train_refs, test_refs) = labeled(&plan);
    let mut train_data = Vec::with_capacity(train_refs.len());
    for (r, positive) in &train_refs {
        let f = prepare(source.feature(r)?, spec.normalize);
        let label = if *positive {
            TrainingLabel::Positive
        } else {
            TrainingLabel::Negative
        };
        train_data.push((f, label));
    }
    let cfg = TrainConfig {
        c: spec.c,
        seed: spec.seed,
        ..TrainConfig::default()
    };
    let model = train_linear_svm(&train_data, &cfg).at(Stage::Train)?;

    let train_ranked = rank(scored(&source, &model, &train_refs, spec.normalize)?);
    let test_ranked = rank(scored(&source, &model, &test_refs, spec.normalize)?);
    let train_ap = average_precision(&train_ranked).at(Stage::Evaluate)?;
    let test_ap = average_precision(&test_ranked).at(Stage::Evaluate)?;

    Ok(RunReport {
        test_name: spec.test_name.clone(),
        arch: spec.arch_label(),
        dataset: manifest.dataset_name,
        category: plan.category,
        train_top36: top_n(&train_ranked, DEFAULT_TOP_N),
        test_top36: top_n(&test_ranked, DEFAULT_TOP_N),
        train_ap,
        test_ap,
        model,
        wall_minutes: started.elapsed().as_secs_f64() / 60.0,
    })
}
