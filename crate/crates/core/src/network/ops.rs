//! Forward kernels. All operate on HWC tensors with zero padding for
//! convolutions and out-of-bounds exclusion for pooling.

use super::spec::window_output;
use super::tensor::{Shape, Tensor};
use super::NetworkError;
use crate::rng::SplitMix64;

/// Convolution weights laid out `[out][ky][kx][in]`, plus per-output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvWeights {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, pad: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
            weights: vec![0.0; out_channels * kernel * kernel * in_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// Weights drawn from `rng` in layout order; bias stays zero.
    pub fn generate(
        rng: &mut SplitMix64,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let mut conv = Self::zeros(in_channels, out_channels, kernel, stride, pad);
        conv.weights.iter_mut().for_each(|w| *w = rng.next_weight());
        conv
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weight(&self, o: usize, ky: usize, kx: usize, i: usize) -> f64 {
        self.weights[((o * self.kernel + ky) * self.kernel + kx) * self.in_channels + i]
    }

    pub fn output_shape(&self, input: Shape) -> Option<Shape> {
        Some(Shape::new(
            window_output(input.h, self.kernel, self.stride, self.pad)?,
            window_output(input.w, self.kernel, self.stride, self.pad)?,
            self.out_channels,
        ))
    }
}

/// Fully connected weights laid out `[out][in]` over the flattened input.
#[derive(Debug, Clone, PartialEq)]
pub struct FcWeights {
    pub in_units: usize,
    pub out_units: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl FcWeights {
    pub fn generate(rng: &mut SplitMix64, in_units: usize, out_units: usize) -> Self {
        Self {
            in_units,
            out_units,
            weights: (0..in_units * out_units).map(|_| rng.next_weight()).collect(),
            bias: vec![0.0; out_units],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InceptionWeights {
    pub branch1: ConvWeights,
    pub reduce3: ConvWeights,
    pub conv3: ConvWeights,
    pub reduce5: ConvWeights,
    pub conv5: ConvWeights,
    pub pool_proj: ConvWeights,
}

impl InceptionWeights {
    /// Draw order: branch1, reduce3, conv3, reduce5, conv5, pool_proj.
    /// The reduction convs output the same width as their branch.
    pub fn generate(rng: &mut SplitMix64, in_c: usize, b1: usize, b2: usize, b3: usize, b4: usize) -> Self {
        Self {
            branch1: ConvWeights::generate(rng, in_c, b1, 1, 1, 0),
            reduce3: ConvWeights::generate(rng, in_c, b2, 1, 1, 0),
            conv3: ConvWeights::generate(rng, b2, b2, 3, 1, 1),
            reduce5: ConvWeights::generate(rng, in_c, b3, 1, 1, 0),
            conv5: ConvWeights::generate(rng, b3, b3, 5, 1, 2),
            pool_proj: ConvWeights::generate(rng, in_c, b4, 1, 1, 0),
        }
    }

    pub(crate) fn convs_mut(&mut self) -> [&mut ConvWeights; 6] {
        [
            &mut self.branch1,
            &mut self.reduce3,
            &mut self.conv3,
            &mut self.reduce5,
            &mut self.conv5,
            &mut self.pool_proj,
        ]
    }
}

/// Residual block: `relu(conv2(relu(conv1(x))) + shortcut(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResBlockWeights {
    pub conv1: ConvWeights,
    pub conv2: ConvWeights,
    /// 1x1 projection at the block stride; `None` means identity shortcut.
    pub projection: Option<ConvWeights>,
}

impl ResBlockWeights {
    pub fn needs_projection(in_c: usize, out_c: usize, stride: usize) -> bool {
        in_c != out_c || stride != 1
    }

    pub fn zeros(in_c: usize, out_c: usize, stride: usize) -> Self {
        Self {
            conv1: ConvWeights::zeros(in_c, out_c, 3, stride, 1),
            conv2: ConvWeights::zeros(out_c, out_c, 3, 1, 1),
            projection: Self::needs_projection(in_c, out_c, stride)
                .then(|| ConvWeights::zeros(in_c, out_c, 1, stride, 0)),
        }
    }

    /// Draw order: conv1, conv2, projection.
    pub fn generate(rng: &mut SplitMix64, in_c: usize, out_c: usize, stride: usize) -> Self {
        let conv1 = ConvWeights::generate(rng, in_c, out_c, 3, stride, 1);
        let conv2 = ConvWeights::generate(rng, out_c, out_c, 3, 1, 1);
        let projection = Self::needs_projection(in_c, out_c, stride)
            .then(|| ConvWeights::generate(rng, in_c, out_c, 1, stride, 0));
        Self {
            conv1,
            conv2,
            projection,
        }
    }

    pub fn stride(&self) -> usize {
        self.conv1.stride
    }

    pub(crate) fn convs_mut(&mut self) -> Vec<&mut ConvWeights> {
        let mut v = vec![&mut self.conv1, &mut self.conv2];
        if let Some(p) = self.projection.as_mut() {
            v.push(p);
        }
        v
    }
}

pub fn conv2d(input: &Tensor, conv: &ConvWeights) -> Result<Tensor, NetworkError> {
    let ins = input.shape();
    if ins.c != conv.in_channels {
        return Err(NetworkError::ShapeMismatch {
            expected: Shape::new(ins.h, ins.w, conv.in_channels),
            found: ins,
        });
    }
    let outs = conv.output_shape(ins).ok_or(NetworkError::NonPositiveOutput {
        layer: format!("conv {} {} {} {}", conv.out_channels, conv.kernel, conv.stride, conv.pad),
        input: ins,
    })?;
    let k = conv.kernel;
    let mut out = Tensor::zeros(outs);
    let data = input.data();
    let out_data = out.data_mut();
    let mut acc = vec![0.0; conv.out_channels];
    for oy in 0..outs.h {
        for ox in 0..outs.w {
            acc.copy_from_slice(&conv.bias);
            for ky in 0..k {
                let iy = (oy * conv.stride + ky) as isize - conv.pad as isize;
                if iy < 0 || iy >= ins.h as isize {
                    continue;
                }
                for kx in 0..k {
                    let ix = (ox * conv.stride + kx) as isize - conv.pad as isize;
                    if ix < 0 || ix >= ins.w as isize {
                        continue;
                    }
                    let base = (iy as usize * ins.w + ix as usize) * ins.c;
                    let pixel = &data[base..base + ins.c];
                    for (o, a) in acc.iter_mut().enumerate() {
                        let wbase = ((o * k + ky) * k + kx) * ins.c;
                        let wrow = &conv.weights[wbase..wbase + ins.c];
                        *a += pixel.iter().zip(wrow).map(|(p, w)| p * w).sum::<f64>();
                    }
                }
            }
            let obase = (oy * outs.w + ox) * outs.c;
            out_data[obase..obase + outs.c].copy_from_slice(&acc);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Avg,
}

/// Window pooling. Padded positions are excluded from both the max and
/// the average.
pub fn pool2d(input: &Tensor, kind: PoolKind, kernel: usize, stride: usize, pad: usize) -> Result<Tensor, NetworkError> {
    let ins = input.shape();
    let fail = || NetworkError::NonPositiveOutput {
        layer: format!("pool {kernel} {stride}"),
        input: ins,
    };
    let oh = window_output(ins.h, kernel, stride, pad).ok_or_else(fail)?;
    let ow = window_output(ins.w, kernel, stride, pad).ok_or_else(fail)?;
    let mut out = Tensor::zeros(Shape::new(oh, ow, ins.c));
    for oy in 0..oh {
        for ox in 0..ow {
            let y0 = (oy * stride) as isize - pad as isize;
            let x0 = (ox * stride) as isize - pad as isize;
            let ys = y0.max(0) as usize..((y0 + kernel as isize).min(ins.h as isize)) as usize;
            let xs = x0.max(0) as usize..((x0 + kernel as isize).min(ins.w as isize)) as usize;
            for c in 0..ins.c {
                let mut max = f64::NEG_INFINITY;
                let mut sum = 0.0;
                let mut count = 0usize;
                for y in ys.clone() {
                    for x in xs.clone() {
                        let v = input.get(y, x, c);
                        max = max.max(v);
                        sum += v;
                        count += 1;
                    }
                }
                let v = match kind {
                    PoolKind::Max => max,
                    PoolKind::Avg => sum / count as f64,
                };
                out.set(oy, ox, c, v);
            }
        }
    }
    Ok(out)
}

pub fn fully_connected(input: &Tensor, fc: &FcWeights) -> Result<Tensor, NetworkError> {
    let x = input.data();
    if x.len() != fc.in_units {
        return Err(NetworkError::ShapeMismatch {
            expected: Shape::new(1, 1, fc.in_units),
            found: input.shape(),
        });
    }
    let data = fc
        .weights
        .chunks_exact(fc.in_units)
        .zip(&fc.bias)
        .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect();
    Ok(Tensor::from_vec(Shape::new(1, 1, fc.out_units), data).expect("fc output length"))
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.relu_in_place();
    out
}

fn conv_relu(input: &Tensor, conv: &ConvWeights) -> Result<Tensor, NetworkError> {
    let mut t = conv2d(input, conv)?;
    t.relu_in_place();
    Ok(t)
}

/// Each branch convolution is followed by a ReLU before concatenation.
pub fn inception_forward(input: &Tensor, w: &InceptionWeights) -> Result<Tensor, NetworkError> {
    let b1 = conv_relu(input, &w.branch1)?;
    let b2 = conv_relu(&conv_relu(input, &w.reduce3)?, &w.conv3)?;
    let b3 = conv_relu(&conv_relu(input, &w.reduce5)?, &w.conv5)?;
    let pooled = pool2d(input, PoolKind::Max, 3, 1, 1)?;
    let b4 = conv_relu(&pooled, &w.pool_proj)?;
    Ok(Tensor::concat_channels(&[b1, b2, b3, b4]))
}

pub fn resblock_forward(input: &Tensor, w: &ResBlockWeights) -> Result<Tensor, NetworkError> {
    let ins = input.shape();
    if ins.c != w.conv1.in_channels {
        return Err(NetworkError::ShapeMismatch {
            expected: Shape::new(ins.h, ins.w, w.conv1.in_channels),
            found: ins,
        });
    }
    if w.projection.is_none() && ResBlockWeights::needs_projection(ins.c, w.conv1.out_channels, w.stride()) {
        return Err(NetworkError::InvalidSpec(
            "resblock changes shape but has no projection shortcut".into(),
        ));
    }
    let residual = conv2d(&conv_relu(input, &w.conv1)?, &w.conv2)?;
    let shortcut = match &w.projection {
        Some(p) => conv2d(input, p)?,
        None => input.clone(),
    };
    if residual.shape() != shortcut.shape() {
        return Err(NetworkError::ShapeMismatch {
            expected: residual.shape(),
            found: shortcut.shape(),
        });
    }
    let mut out = residual;
    for (o, s) in out.data_mut().iter_mut().zip(shortcut.data()) {
        *o = (*o + s).max(0.0);
    }
    Ok(out)
}
