//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use matbench::evaluation::ScoredImage;
use matbench::features::FeatureVector;
use matbench::network::{ConvWeights, LayerSpec, Shape, Tensor};
use matbench::svm::TrainingLabel;

/// AP as the mean, over relevant positions, of the precision of the prefix
/// ending there.
pub fn ap_oracle(relevance: &[bool]) -> f64 {
    let total = relevance.iter().filter(|r| **r).count();
    let mut sum = 0.0;
    for (k, rel) in relevance.iter().enumerate() {
        if *rel {
            let prefix = &relevance[..=k];
            let hits = prefix.iter().filter(|r| **r).count();
            sum += hits as f64 / prefix.len() as f64;
        }
    }
    sum / total as f64
}

/// Items whose ids already sort in list order and whose scores descend.
pub fn ranked_items(relevance: &[bool]) -> Vec<ScoredImage> {
    relevance
        .iter()
        .enumerate()
        .map(|(i, r)| ScoredImage::new(format!("img{i:03}"), (relevance.len() - i) as f64, *r))
        .collect()
}

/// Zero-padded direct convolution, one output element at a time.
pub fn conv_reference(input: &Tensor, conv: &ConvWeights) -> Tensor {
    let s = input.shape();
    let oh = (s.h + 2 * conv.pad - conv.kernel) / conv.stride + 1;
    let ow = (s.w + 2 * conv.pad - conv.kernel) / conv.stride + 1;
    Tensor::from_fn(Shape::new(oh, ow, conv.out_channels), |oy, ox, o| {
        let mut acc = conv.bias[o];
        for ky in 0..conv.kernel {
            for kx in 0..conv.kernel {
                for i in 0..conv.in_channels {
                    let y = (oy * conv.stride + ky) as isize - conv.pad as isize;
                    let x = (ox * conv.stride + kx) as isize - conv.pad as isize;
                    if y >= 0 && x >= 0 && (y as usize) < s.h && (x as usize) < s.w {
                        acc += input.get(y as usize, x as usize, i) * conv.weight(o, ky, kx, i);
                    }
                }
            }
        }
        acc
    })
}

pub type Fixture = Vec<([f64; 2], f64)>;

pub fn svm_fixtures() -> Vec<Fixture> {
    vec![
        vec![([-1.0, 0.0], -1.0), ([1.0, 0.0], 1.0)],
        vec![
            ([1.0, 1.0], 1.0),
            ([2.0, 1.5], 1.0),
            ([1.5, 2.0], 1.0),
            ([-1.0, -1.0], -1.0),
            ([-2.0, -1.5], -1.0),
            ([-1.5, -0.5], -1.0),
        ],
        vec![
            ([0.5, 0.2], 1.0),
            ([0.9, -0.3], 1.0),
            ([0.1, 0.8], 1.0),
            ([-0.4, -0.6], -1.0),
            ([-0.7, 0.1], -1.0),
            ([0.2, -0.9], -1.0),
            ([1.2, 0.4], 1.0),
            ([-1.0, -0.2], -1.0),
        ],
        vec![([1.0, 0.0], 1.0), ([0.0, 1.0], 1.0), ([-1.0, 0.0], -1.0), ([0.0, -1.0], -1.0)],
        vec![
            ([0.3, 0.3], 1.0),
            ([0.4, -0.1], -1.0),
            ([-0.2, 0.5], 1.0),
            ([0.1, 0.1], -1.0),
            ([-0.3, -0.2], -1.0),
        ],
        vec![
            ([2.0, 0.0], 1.0),
            ([2.5, 1.0], 1.0),
            ([-0.5, 0.2], -1.0),
            ([0.3, -0.1], -1.0),
            ([1.0, 0.0], 1.0),
            ([0.6, 0.6], -1.0),
            ([1.8, -0.4], 1.0),
        ],
    ]
}

pub fn to_training(f: &Fixture) -> Vec<(FeatureVector, TrainingLabel)> {
    f.iter()
        .map(|(x, y)| {
            let label = if *y > 0.0 { TrainingLabel::Positive } else { TrainingLabel::Negative };
            (FeatureVector::new("p", x.to_vec()), label)
        })
        .collect()
}

fn objective(f: &Fixture, w: [f64; 2], b: f64, c: f64) -> f64 {
    let hinge: f64 = f
        .iter()
        .map(|(x, y)| (1.0 - y * (w[0] * x[0] + w[1] * x[1] + b)).max(0.0))
        .sum();
    0.5 * (w[0] * w[0] + w[1] * w[1]) + c * hinge
}

/// Minimum of the soft-margin objective over the grid of step 0.01 on
/// [-3, 3]^3. For each grid `w` the objective is convex in `b`, so the `b`
/// axis is searched by ternary search over grid indices instead of a scan.
pub fn grid_minimum(f: &Fixture, c: f64) -> f64 {
    const STEPS: i32 = 300;
    let at = |i: i32| i as f64 / 100.0;
    let mut best = f64::INFINITY;
    for i in -STEPS..=STEPS {
        for k in -STEPS..=STEPS {
            let w = [at(i), at(k)];
            let j = |b: i32| objective(f, w, at(b), c);
            let (mut lo, mut hi) = (-STEPS, STEPS);
            while hi - lo > 2 {
                let m1 = lo + (hi - lo) / 3;
                let m2 = hi - (hi - lo) / 3;
                if j(m1) <= j(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            for b in lo..=hi {
                best = best.min(j(b));
            }
        }
    }
    best
}

/// Category sizes (2..=60 images each) for 2..=23 categories.
pub fn manifest_strategy() -> impl proptest::strategy::Strategy<Value = Vec<usize>> {
    proptest::collection::vec(2usize..=60, 2..=23)
}

pub fn sized_manifest(sizes: &[usize]) -> matbench::dataset::DatasetManifest {
    let names: Vec<String> = (0..sizes.len()).map(|i| format!("cat{i:02}")).collect();
    let cats: Vec<(&str, usize)> = names.iter().map(String::as_str).zip(sizes.iter().copied()).collect();
    matbench::dataset::synthetic_manifest("prop", &cats, 40)
}

/// Partition, exclusion and size rules of one split, checked against the
/// manifest directly.
pub fn check_split(
    m: &matbench::dataset::DatasetManifest,
    category: &str,
    fraction: f64,
) -> Result<matbench::dataset::SplitPlan, String> {
    use matbench::dataset::build_split;
    let plan = build_split(m, category, fraction).map_err(|e| e.to_string())?;
    let ids = &m.category(category).unwrap().image_ids;
    let n = ids.len();
    let ensure = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{category}: {what}")) };

    ensure(plan.pos_train.len() == n.div_ceil(2), "pos_train size")?;
    ensure(plan.pos_test.len() == n / 2, "pos_test size")?;
    let joined: Vec<&String> = plan.pos_train.iter().chain(&plan.pos_test).map(|r| &r.image_id).collect();
    ensure(joined == ids.iter().collect::<Vec<_>>(), "positives partition the category in order")?;
    ensure(
        plan.pos_train.iter().chain(&plan.pos_test).all(|r| r.source == category),
        "positive sources",
    )?;

    ensure(plan.neg_train.iter().all(|r| r.source != category && !ids.contains(&r.image_id)), "neg_train exclusion")?;
    ensure(plan.neg_test.iter().all(|r| !ids.contains(&r.image_id)), "neg_test exclusion")?;
    let expected_neg: usize = m
        .categories
        .iter()
        .filter(|c| c.name != category)
        .map(|c| {
            let half = c.image_ids.len().div_ceil(2);
            ((fraction * half as f64).ceil() as usize).min(half)
        })
        .sum();
    ensure(plan.neg_train.len() == expected_neg, "neg_train size")?;
    ensure(plan.neg_test.len() == plan.pos_test.len(), "neg_test size")?;
    ensure(
        plan.neg_test.iter().map(|r| &r.image_id).eq(m.negative_pool.iter().take(plan.pos_test.len())),
        "neg_test is the pool prefix",
    )?;
    Ok(plan)
}

/// Writes a two-category manifest (`pos`, `neg`, 10 images each, pool of 10)
/// and an FVEC file where `pos` images sit near (1, 0) and everything else
/// near (-1, 0). Returns (manifest, features).
pub fn separable_fixture(dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
    use matbench::dataset::{synthetic_manifest, write_manifest};
    use matbench::features::{write_features, FeatureRecord, RecordLabel};
    let m = synthetic_manifest("sep", &[("pos", 10), ("neg", 10)], 10);
    let mut rng = matbench::rng::SplitMix64::new(11);
    let mut jitter = move || 0.2 * (2.0 * rng.next_f64() - 1.0);
    let mut records = Vec::new();
    for cat in &m.categories {
        let x = if cat.name == "pos" { 1.0 } else { -1.0 };
        for id in &cat.image_ids {
            records.push(FeatureRecord::new(id.as_str(), RecordLabel::Unlabeled, vec![x + jitter(), jitter()]));
        }
    }
    for id in &m.negative_pool {
        records.push(FeatureRecord::new(id.as_str(), RecordLabel::Unlabeled, vec![-1.0 + jitter(), jitter()]));
    }
    let manifest = dir.join("manifest.txt");
    std::fs::write(&manifest, write_manifest(&m)).unwrap();
    let features = dir.join("features.fvec");
    write_features(&records, std::fs::File::create(&features).unwrap()).unwrap();
    (manifest, features)
}

/// Output shape computed from first principles, independent of the engine.
pub fn expected_shape(s: Shape, layer: &LayerSpec) -> Shape {
    let win = |n: usize, k: usize, st: usize, p: usize| (n + 2 * p - k) / st + 1;
    match *layer {
        LayerSpec::Conv { out_channels, kernel, stride, pad } => {
            Shape::new(win(s.h, kernel, stride, pad), win(s.w, kernel, stride, pad), out_channels)
        }
        LayerSpec::MaxPool { kernel, stride } | LayerSpec::AvgPool { kernel, stride } => {
            Shape::new(win(s.h, kernel, stride, 0), win(s.w, kernel, stride, 0), s.c)
        }
        LayerSpec::Fc { out_units } => Shape::new(1, 1, out_units),
        LayerSpec::Inception { b1, b2, b3, b4 } => Shape::new(s.h, s.w, b1 + b2 + b3 + b4),
        LayerSpec::ResBlock { out_channels, stride } => {
            Shape::new(s.h.div_ceil(stride), s.w.div_ceil(stride), out_channels)
        }
        LayerSpec::Relu | LayerSpec::Tap => s,
    }
}

