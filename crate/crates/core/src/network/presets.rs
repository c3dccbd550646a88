//! Desk-scale analogues of the nine evaluated architecture families.
//!
//! Each preset keeps the trait that distinguishes its family (first-layer
//! stride, where the stride drops to one, inception stacking, residual
//! depth per stage) at a fraction of the width and input resolution.
//! Residual presets use basic two-conv blocks with the standard per-stage
//! block counts (3-4-6-3, 3-4-23-3, 3-8-36-3).

use super::spec::{LayerSpec, NetworkSpec};
use super::tensor::Shape;

pub const PRESET_NAMES: [&str; 9] = [
    "vggf-mini",
    "vggm-mini",
    "vggs-mini",
    "googlenet-mini",
    "vgg16-mini",
    "vgg19-mini",
    "resnet50-mini",
    "resnet101-mini",
    "resnet152-mini",
];

/// Width of the fc layer feeding the classifier head in the VGG-family presets.
pub const VGG_PENULTIMATE_FC: usize = 128;

pub const CLASSIFIER_UNITS: usize = 10;

fn conv_relu(layers: &mut Vec<LayerSpec>, out: usize, k: usize, stride: usize, pad: usize) {
    layers.push(LayerSpec::conv(out, k, stride, pad));
    layers.push(LayerSpec::Relu);
}

fn vgg_head(layers: &mut Vec<LayerSpec>, width: usize) {
    layers.extend([
        LayerSpec::fc(width),
        LayerSpec::Relu,
        LayerSpec::fc(width),
        LayerSpec::Relu,
        LayerSpec::fc(CLASSIFIER_UNITS),
    ]);
}

fn vgg_cnn(first_stride: usize, stride_one_from: usize) -> (Shape, Vec<LayerSpec>) {
    // stride_one_from: 1-based conv index from which every conv has stride 1.
    let mut l = Vec::new();
    let k1 = if first_stride == 4 { 11 } else { 7 };
    conv_relu(&mut l, 16, k1, first_stride, 0);
    l.push(LayerSpec::maxpool(2, 2));
    let s2 = if stride_one_from <= 2 { 1 } else { 2 };
    conv_relu(&mut l, 32, 5, s2, 2);
    if s2 == 1 {
        l.push(LayerSpec::maxpool(2, 2));
    }
    for _ in 0..3 {
        conv_relu(&mut l, 32, 3, 1, 1);
    }
    l.push(LayerSpec::maxpool(2, 2));
    vgg_head(&mut l, VGG_PENULTIMATE_FC);
    (Shape::new(64, 64, 3), l)
}

fn vgg_deep(blocks: [usize; 5]) -> (Shape, Vec<LayerSpec>) {
    let widths = [8, 16, 32, 32, 32];
    let mut l = Vec::new();
    for (n, w) in blocks.iter().zip(widths) {
        for _ in 0..*n {
            conv_relu(&mut l, w, 3, 1, 1);
        }
        l.push(LayerSpec::maxpool(2, 2));
    }
    vgg_head(&mut l, VGG_PENULTIMATE_FC);
    (Shape::new(32, 32, 3), l)
}

fn googlenet() -> (Shape, Vec<LayerSpec>) {
    let mut l = Vec::new();
    conv_relu(&mut l, 16, 7, 2, 3);
    l.push(LayerSpec::maxpool(2, 2));
    conv_relu(&mut l, 32, 3, 1, 1);
    l.push(LayerSpec::inception(8, 16, 4, 4));
    l.push(LayerSpec::inception(16, 16, 8, 8));
    l.push(LayerSpec::maxpool(2, 2));
    l.push(LayerSpec::inception(16, 24, 8, 8));
    l.push(LayerSpec::inception(16, 24, 8, 8));
    l.push(LayerSpec::avgpool(4, 1));
    l.push(LayerSpec::fc(CLASSIFIER_UNITS));
    (Shape::new(32, 32, 3), l)
}

fn resnet(stage_blocks: [usize; 4]) -> (Shape, Vec<LayerSpec>) {
    let widths = [16, 32, 48, 64];
    let mut l = Vec::new();
    conv_relu(&mut l, 16, 7, 2, 3);
    l.push(LayerSpec::maxpool(2, 2));
    for (stage, (n, w)) in stage_blocks.iter().zip(widths).enumerate() {
        for b in 0..*n {
            let stride = if stage > 0 && b == 0 { 2 } else { 1 };
            l.push(LayerSpec::resblock(w, stride));
        }
    }
    l.push(LayerSpec::avgpool(2, 1));
    l.push(LayerSpec::fc(CLASSIFIER_UNITS));
    (Shape::new(64, 64, 3), l)
}

/// Looks up a preset by name; `seed` drives its weights.
pub fn preset(name: &str, seed: u64) -> Option<NetworkSpec> {
    let (input, layers) = match name {
        "vggf-mini" => vgg_cnn(4, 2),
        "vggm-mini" => vgg_cnn(2, 3),
        "vggs-mini" => vgg_cnn(2, 2),
        "googlenet-mini" => googlenet(),
        "vgg16-mini" => vgg_deep([2, 2, 3, 3, 3]),
        "vgg19-mini" => vgg_deep([2, 2, 4, 4, 4]),
        "resnet50-mini" => resnet([3, 4, 6, 3]),
        "resnet101-mini" => resnet([3, 4, 23, 3]),
        "resnet152-mini" => resnet([3, 8, 36, 3]),
        _ => return None,
    };
    Some(NetworkSpec::new(name, input, layers, seed))
}

pub fn all_presets(seed: u64) -> Vec<NetworkSpec> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n, seed).expect("listed preset exists"))
        .collect()
}
