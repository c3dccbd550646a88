//! Forward-only layer engine with a tap point for feature extraction.
//!
//! A [`NetworkSpec`] is an ordered list of layers. Features are read at the
//! tap: an explicit `tap` layer, or implicitly the input of the last fc
//! layer. Nothing after the tap is executed. Weights are not learned; each
//! layer draws them from SplitMix64 seeded by `seed ^ (index * GOLDEN_GAMMA)`.

mod engine;
mod ops;
mod patch;
mod presets;
mod spec;
mod tensor;

use thiserror::Error;

pub use engine::{forward_with_tap, LayerWeights, Network};
pub use ops::{
    conv2d, fully_connected, inception_forward, pool2d, relu, resblock_forward, ConvWeights, FcWeights,
    InceptionWeights, PoolKind, ResBlockWeights,
};
pub use patch::{crop, extract_patch, patch_window, resize_bilinear, CropWindow};
pub use presets::{all_presets, preset, PRESET_NAMES, VGG_PENULTIMATE_FC};
pub use spec::{layer_output_shape, window_output, LayerSpec, NetworkSpec};
pub use tensor::{ImageTensor, Shape, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: Shape, found: Shape },
    #[error("`{layer}` on input {input} has non-positive output")]
    NonPositiveOutput { layer: String, input: Shape },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("patch center ({x}, {y}) outside image {shape}")]
    CenterOutOfBounds { x: f64, y: f64, shape: Shape },
    #[error("patch scale {scale} yields an empty crop")]
    DegeneratePatch { scale: f64 },
    #[error("patch scale {0} outside (0, 1]")]
    InvalidScale(f64),
    #[error("input image contains non-finite values")]
    NonFinite,
}
