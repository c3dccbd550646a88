use std::io::BufRead;

use super::ops::{
    conv2d, fully_connected, inception_forward, pool2d, resblock_forward, ConvWeights, FcWeights, InceptionWeights,
    PoolKind, ResBlockWeights,
};
use super::spec::{LayerSpec, NetworkSpec};
use super::tensor::{ImageTensor, Shape, Tensor};
use super::NetworkError;
use crate::features::{parse_finite, FeatureVector};
use crate::rng::SplitMix64;

/// Parameters of one layer. Parameter-free layers carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    None,
    Conv(ConvWeights),
    Fc(FcWeights),
    Inception(InceptionWeights),
    ResBlock(ResBlockWeights),
}

impl LayerWeights {
    /// Deterministic weights for layer `index` given its input shape.
    pub fn generate(seed: u64, index: usize, layer: &LayerSpec, input: Shape) -> Self {
        let mut rng = SplitMix64::for_layer(seed, index);
        match *layer {
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                pad,
            } => LayerWeights::Conv(ConvWeights::generate(&mut rng, input.c, out_channels, kernel, stride, pad)),
            LayerSpec::Fc { out_units } => LayerWeights::Fc(FcWeights::generate(&mut rng, input.len(), out_units)),
            LayerSpec::Inception { b1, b2, b3, b4 } => {
                LayerWeights::Inception(InceptionWeights::generate(&mut rng, input.c, b1, b2, b3, b4))
            }
            LayerSpec::ResBlock {
                out_channels,
                stride,
            } => LayerWeights::ResBlock(ResBlockWeights::generate(&mut rng, input.c, out_channels, stride)),
            LayerSpec::Relu | LayerSpec::MaxPool { .. } | LayerSpec::AvgPool { .. } | LayerSpec::Tap => {
                LayerWeights::None
            }
        }
    }

    /// Weight slices in generation order; biases are not included.
    fn slices_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            LayerWeights::None => Vec::new(),
            LayerWeights::Conv(c) => vec![&mut c.weights],
            LayerWeights::Fc(f) => vec![&mut f.weights],
            LayerWeights::Inception(i) => i.convs_mut().into_iter().map(|c| &mut c.weights).collect(),
            LayerWeights::ResBlock(r) => r.convs_mut().into_iter().map(|c| &mut c.weights).collect(),
        }
    }

    pub fn param_count(&mut self) -> usize {
        self.slices_mut().iter().map(|s| s.len()).sum()
    }

    /// Replaces all weights with `values`, consumed in generation order.
    pub fn overwrite(&mut self, values: &[f64]) -> Result<(), usize> {
        let expected = self.param_count();
        if values.len() != expected {
            return Err(expected);
        }
        let mut rest = values;
        for slice in self.slices_mut() {
            let (head, tail) = rest.split_at(slice.len());
            slice.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }
}

/// A validated spec with weights materialized for every layer up to the tap.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    tap: usize,
    shapes: Vec<Shape>,
    weights: Vec<LayerWeights>,
}

impl Network {
    pub fn build(spec: &NetworkSpec) -> Result<Self, NetworkError> {
        let tap = spec.tap_index()?;
        let shapes = spec.shapes()?;
        let weights = spec.layers[..tap]
            .iter()
            .enumerate()
            .map(|(i, layer)| LayerWeights::generate(spec.seed, i, layer, shapes[i]))
            .collect();
        Ok(Self {
            spec: spec.clone(),
            tap,
            shapes,
            weights,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn tap_index(&self) -> usize {
        self.tap
    }

    pub fn feature_dim(&self) -> usize {
        self.shapes[self.tap].len()
    }

    pub fn weights(&self) -> &[LayerWeights] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [LayerWeights] {
        &mut self.weights
    }

    /// Overrides generated weights from a weight file:
    ///
    /// ```text
    /// WGT <entries>
    /// <layer_index> <v1> ... <vP>
    /// ```
    ///
    /// `P` must equal the layer's weight count. Layers at or after the tap
    /// are rejected since they never run.
    pub fn load_weights<R: BufRead>(&mut self, reader: R) -> Result<usize, NetworkError> {
        let mut lines = reader.lines().enumerate();
        let err = |line: usize, msg: String| NetworkError::Parse { line, msg };
        let io = |e: std::io::Error| NetworkError::Parse {
            line: 0,
            msg: e.to_string(),
        };
        let count = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(io)?;
                match line.split(' ').collect::<Vec<_>>().as_slice() {
                    ["WGT", n] => n.parse::<usize>().map_err(|_| err(1, "bad WGT count".into()))?,
                    _ => return Err(err(1, "expected `WGT <entries>` header".into())),
                }
            }
            None => return Err(err(1, "missing WGT header".into())),
        };
        let mut seen = 0;
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(io)?;
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split(' ');
            let layer: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(lineno, "expected layer index".into()))?;
            let values = toks
                .map(|t| parse_finite(t).ok_or_else(|| err(lineno, format!("invalid value `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let target = self
                .weights
                .get_mut(layer)
                .ok_or_else(|| err(lineno, format!("layer {layer} is not before the tap")))?;
            target
                .overwrite(&values)
                .map_err(|n| err(lineno, format!("layer {layer} takes {n} weights, got {}", values.len())))?;
            seen += 1;
        }
        if seen != count {
            return Err(err(1, format!("header declares {count} entries, found {seen}")));
        }
        Ok(seen)
    }

    /// Runs the layers before the tap and returns the flattened activation.
    pub fn forward(&self, image: &ImageTensor, source_image: &str) -> Result<FeatureVector, NetworkError> {
        if image.shape() != self.spec.input_shape {
            return Err(NetworkError::ShapeMismatch {
                expected: self.spec.input_shape,
                found: image.shape(),
            });
        }
        if !image.is_finite() {
            return Err(NetworkError::NonFinite);
        }
        let mut act: Tensor = image.clone();
        for (layer, weights) in self.spec.layers[..self.tap].iter().zip(&self.weights) {
            act = apply_layer(&act, layer, weights)?;
        }
        Ok(FeatureVector::new(source_image, act.into_data()))
    }
}

fn apply_layer(input: &Tensor, layer: &LayerSpec, weights: &LayerWeights) -> Result<Tensor, NetworkError> {
    match (layer, weights) {
        (LayerSpec::Conv { .. }, LayerWeights::Conv(w)) => conv2d(input, w),
        (LayerSpec::Relu, _) => {
            let mut t = input.clone();
            t.relu_in_place();
            Ok(t)
        }
        (LayerSpec::MaxPool { kernel, stride }, _) => pool2d(input, PoolKind::Max, *kernel, *stride, 0),
        (LayerSpec::AvgPool { kernel, stride }, _) => pool2d(input, PoolKind::Avg, *kernel, *stride, 0),
        (LayerSpec::Fc { .. }, LayerWeights::Fc(w)) => fully_connected(input, w),
        (LayerSpec::Inception { .. }, LayerWeights::Inception(w)) => inception_forward(input, w),
        (LayerSpec::ResBlock { .. }, LayerWeights::ResBlock(w)) => resblock_forward(input, w),
        (LayerSpec::Tap, _) => Ok(input.clone()),
        (layer, _) => Err(NetworkError::InvalidSpec(format!("weights do not match layer `{layer}`"))),
    }
}

/// Builds the network for `spec` and extracts the tap feature of `image`.
/// For many images, build a [`Network`] once instead.
pub fn forward_with_tap(spec: &NetworkSpec, image: &ImageTensor) -> Result<FeatureVector, NetworkError> {
    Network::build(spec)?.forward(image, "")
}
