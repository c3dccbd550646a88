use std::fmt;

use super::tensor::Shape;
use super::NetworkError;

/// One layer of a [`NetworkSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Relu,
    MaxPool {
        kernel: usize,
        stride: usize,
    },
    AvgPool {
        kernel: usize,
        stride: usize,
    },
    Fc {
        out_units: usize,
    },
    /// Four same-padded branches concatenated on channels:
    /// 1x1 (`b1`), 1x1 -> 3x3 (`b2`), 1x1 -> 5x5 (`b3`), 3x3 maxpool -> 1x1 (`b4`).
    Inception {
        b1: usize,
        b2: usize,
        b3: usize,
        b4: usize,
    },
    ResBlock {
        out_channels: usize,
        stride: usize,
    },
    Tap,
}

impl LayerSpec {
    pub fn conv(out_channels: usize, kernel: usize, stride: usize, pad: usize) -> Self {
        LayerSpec::Conv {
            out_channels,
            kernel,
            stride,
            pad,
        }
    }

    pub fn maxpool(kernel: usize, stride: usize) -> Self {
        LayerSpec::MaxPool { kernel, stride }
    }

    pub fn avgpool(kernel: usize, stride: usize) -> Self {
        LayerSpec::AvgPool { kernel, stride }
    }

    pub fn fc(out_units: usize) -> Self {
        LayerSpec::Fc { out_units }
    }

    pub fn inception(b1: usize, b2: usize, b3: usize, b4: usize) -> Self {
        LayerSpec::Inception { b1, b2, b3, b4 }
    }

    pub fn resblock(out_channels: usize, stride: usize) -> Self {
        LayerSpec::ResBlock {
            out_channels,
            stride,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::AvgPool { .. } => "avgpool",
            LayerSpec::Fc { .. } => "fc",
            LayerSpec::Inception { .. } => "inception",
            LayerSpec::ResBlock { .. } => "resblock",
            LayerSpec::Tap => "tap",
        }
    }

    /// Checks the per-kind parameter bounds (kernel, stride, channels >= 1).
    pub fn check_params(&self) -> Result<(), String> {
        let positive = |name: &str, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(format!("{} {name} must be >= 1", self.kind()))
            }
        };
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                ..
            } => {
                positive("out_channels", out_channels)?;
                positive("kernel", kernel)?;
                positive("stride", stride)
            }
            LayerSpec::MaxPool { kernel, stride } | LayerSpec::AvgPool { kernel, stride } => {
                positive("kernel", kernel)?;
                positive("stride", stride)
            }
            LayerSpec::Fc { out_units } => positive("out_units", out_units),
            LayerSpec::Inception { b1, b2, b3, b4 } => {
                positive("b1", b1)?;
                positive("b2", b2)?;
                positive("b3", b3)?;
                positive("b4", b4)
            }
            LayerSpec::ResBlock {
                out_channels,
                stride,
            } => {
                positive("out_channels", out_channels)?;
                positive("stride", stride)
            }
            LayerSpec::Relu | LayerSpec::Tap => Ok(()),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                pad,
            } => write!(f, "conv {out_channels} {kernel} {stride} {pad}"),
            LayerSpec::Relu => write!(f, "relu"),
            LayerSpec::MaxPool { kernel, stride } => write!(f, "maxpool {kernel} {stride}"),
            LayerSpec::AvgPool { kernel, stride } => write!(f, "avgpool {kernel} {stride}"),
            LayerSpec::Fc { out_units } => write!(f, "fc {out_units}"),
            LayerSpec::Inception { b1, b2, b3, b4 } => write!(f, "inception {b1} {b2} {b3} {b4}"),
            LayerSpec::ResBlock {
                out_channels,
                stride,
            } => write!(f, "resblock {out_channels} {stride}"),
            LayerSpec::Tap => write!(f, "tap"),
        }
    }
}

/// Output extent of a sliding window: `floor((input - kernel + 2*pad) / stride) + 1`.
pub fn window_output(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let span = (input + 2 * pad).checked_sub(kernel)?;
    Some(span / stride + 1)
}

pub fn layer_output_shape(input: Shape, layer: &LayerSpec) -> Result<Shape, NetworkError> {
    if input.is_empty() {
        return Err(NetworkError::NonPositiveOutput {
            layer: layer.to_string(),
            input,
        });
    }
    let fail = || NetworkError::NonPositiveOutput {
        layer: layer.to_string(),
        input,
    };
    let spatial = |kernel, stride, pad| -> Result<(usize, usize), NetworkError> {
        let h = window_output(input.h, kernel, stride, pad).ok_or_else(fail)?;
        let w = window_output(input.w, kernel, stride, pad).ok_or_else(fail)?;
        Ok((h, w))
    };
    layer.check_params().map_err(NetworkError::InvalidSpec)?;
    Ok(match *layer {
        LayerSpec::Conv {
            out_channels,
            kernel,
            stride,
            pad,
        } => {
            let (h, w) = spatial(kernel, stride, pad)?;
            Shape::new(h, w, out_channels)
        }
        LayerSpec::MaxPool { kernel, stride } | LayerSpec::AvgPool { kernel, stride } => {
            let (h, w) = spatial(kernel, stride, 0)?;
            Shape::new(h, w, input.c)
        }
        LayerSpec::Fc { out_units } => Shape::new(1, 1, out_units),
        LayerSpec::Relu | LayerSpec::Tap => input,
        LayerSpec::Inception { b1, b2, b3, b4 } => Shape::new(input.h, input.w, b1 + b2 + b3 + b4),
        LayerSpec::ResBlock {
            out_channels,
            stride,
        } => Shape::new(
            (input.h - 1) / stride + 1,
            (input.w - 1) / stride + 1,
            out_channels,
        ),
    })
}

/// An ordered layer list with at most one tap point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub name: String,
    pub input_shape: Shape,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, input_shape: Shape, layers: Vec<LayerSpec>, seed: u64) -> Self {
        Self {
            name: name.into(),
            input_shape,
            layers,
            seed,
        }
    }

    /// Number of leading layers executed before the feature is read.
    ///
    /// An explicit `tap` stops at its own index. Otherwise the tap sits
    /// immediately before the last fc layer, or after the last layer when
    /// the network has no fc layer.
    pub fn tap_index(&self) -> Result<usize, NetworkError> {
        let taps: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Tap))
            .map(|(i, _)| i)
            .collect();
        match taps.as_slice() {
            [] => Ok(self
                .layers
                .iter()
                .rposition(|l| matches!(l, LayerSpec::Fc { .. }))
                .unwrap_or(self.layers.len())),
            [i] => Ok(*i),
            _ => Err(NetworkError::InvalidSpec(format!(
                "{} tap layers, at most one allowed",
                taps.len()
            ))),
        }
    }

    /// Input shape of every layer followed by the final output shape.
    pub fn shapes(&self) -> Result<Vec<Shape>, NetworkError> {
        if self.input_shape.is_empty() {
            return Err(NetworkError::InvalidSpec(format!(
                "input shape {} must be positive",
                self.input_shape
            )));
        }
        let mut shapes = Vec::with_capacity(self.layers.len() + 1);
        let mut cur = self.input_shape;
        shapes.push(cur);
        for layer in &self.layers {
            cur = layer_output_shape(cur, layer)?;
            shapes.push(cur);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        self.tap_index()?;
        self.shapes().map(|_| ())
    }

    /// Shape of the activation returned at the tap.
    pub fn tap_shape(&self) -> Result<Shape, NetworkError> {
        let tap = self.tap_index()?;
        Ok(self.shapes()?[tap])
    }

    pub fn feature_dim(&self) -> Result<usize, NetworkError> {
        Ok(self.tap_shape()?.len())
    }

    /// Parses the line-per-layer text format. `#` starts a comment.
    pub fn parse(name: &str, text: &str, seed: u64) -> Result<Self, NetworkError> {
        let mut input = None;
        let mut layers = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| NetworkError::Parse {
                line: idx + 1,
                msg,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let nums = toks[1..]
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| err(format!("invalid number `{t}`"))))
                .collect::<Result<Vec<usize>, _>>()?;
            let arity = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {n} arguments, got {}", toks[0], nums.len())))
                }
            };
            if toks[0] == "input" {
                arity(3)?;
                if input.is_some() || !layers.is_empty() {
                    return Err(err("`input` must be the first line".into()));
                }
                input = Some(Shape::new(nums[0], nums[1], nums[2]));
                continue;
            }
            if input.is_none() {
                return Err(err("missing `input <h> <w> <c>` line".into()));
            }
            let layer = match toks[0] {
                "conv" => {
                    arity(4)?;
                    LayerSpec::conv(nums[0], nums[1], nums[2], nums[3])
                }
                "relu" => {
                    arity(0)?;
                    LayerSpec::Relu
                }
                "maxpool" => {
                    arity(2)?;
                    LayerSpec::maxpool(nums[0], nums[1])
                }
                "avgpool" => {
                    arity(2)?;
                    LayerSpec::avgpool(nums[0], nums[1])
                }
                "fc" => {
                    arity(1)?;
                    LayerSpec::fc(nums[0])
                }
                "inception" => {
                    arity(4)?;
                    LayerSpec::inception(nums[0], nums[1], nums[2], nums[3])
                }
                "resblock" => {
                    arity(2)?;
                    LayerSpec::resblock(nums[0], nums[1])
                }
                "tap" => {
                    arity(0)?;
                    LayerSpec::Tap
                }
                other => return Err(err(format!("unknown layer kind `{other}`"))),
            };
            layer.check_params().map_err(err)?;
            layers.push(layer);
        }
        let input_shape = input.ok_or(NetworkError::Parse {
            line: 1,
            msg: "missing `input <h> <w> <c>` line".into(),
        })?;
        let spec = NetworkSpec::new(name, input_shape, layers, seed);
        spec.validate()?;
        Ok(spec)
    }

    /// Renders the spec in the format accepted by [`NetworkSpec::parse`].
    pub fn to_text(&self) -> String {
        let s = self.input_shape;
        let mut out = format!("input {} {} {}\n", s.h, s.w, s.c);
        for layer in &self.layers {
            out.push_str(&layer.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_shape_vgg_first_layer() {
        let s = layer_output_shape(Shape::new(224, 224, 3), &LayerSpec::conv(64, 11, 4, 0)).unwrap();
        assert_eq!(s, Shape::new(54, 54, 64));
    }

    #[test]
    fn global_avgpool_collapses() {
        let s = layer_output_shape(Shape::new(7, 7, 1024), &LayerSpec::avgpool(7, 1)).unwrap();
        assert_eq!(s, Shape::new(1, 1, 1024));
    }

    #[test]
    fn kernel_larger_than_input() {
        let r = layer_output_shape(Shape::new(10, 10, 8), &LayerSpec::conv(4, 11, 1, 0));
        assert!(matches!(r, Err(NetworkError::NonPositiveOutput { .. })));
    }

    #[test]
    fn resblock_and_inception_shapes() {
        let s = layer_output_shape(Shape::new(9, 9, 4), &LayerSpec::resblock(8, 2)).unwrap();
        assert_eq!(s, Shape::new(5, 5, 8));
        let s = layer_output_shape(Shape::new(6, 5, 4), &LayerSpec::inception(2, 3, 4, 5)).unwrap();
        assert_eq!(s, Shape::new(6, 5, 14));
        let s = layer_output_shape(Shape::new(6, 5, 4), &LayerSpec::fc(7)).unwrap();
        assert_eq!(s, Shape::new(1, 1, 7));
    }

    #[test]
    fn zero_stride_is_invalid() {
        let r = layer_output_shape(Shape::new(8, 8, 1), &LayerSpec::conv(1, 3, 0, 0));
        assert!(matches!(r, Err(NetworkError::InvalidSpec(_))));
    }

    #[test]
    fn implicit_tap_before_last_fc() {
        let spec = NetworkSpec::new(
            "t",
            Shape::new(4, 4, 1),
            vec![LayerSpec::fc(8), LayerSpec::Relu, LayerSpec::fc(3)],
            0,
        );
        assert_eq!(spec.tap_index().unwrap(), 2);
        assert_eq!(spec.feature_dim().unwrap(), 8);
        let no_fc = NetworkSpec::new("t", Shape::new(4, 4, 1), vec![LayerSpec::Relu], 0);
        assert_eq!(no_fc.tap_index().unwrap(), 1);
        let two = NetworkSpec::new("t", Shape::new(4, 4, 1), vec![LayerSpec::Tap, LayerSpec::Tap], 0);
        assert!(matches!(two.tap_index(), Err(NetworkError::InvalidSpec(_))));
    }

    #[test]
    fn parse_and_render() {
        let text = "input 32 32 3\nconv 8 3 1 1 # first\nrelu\nmaxpool 2 2\ninception 2 2 2 2\nresblock 8 2\ntap\navgpool 4 1\nfc 10\n";
        let spec = NetworkSpec::parse("x", text, 5).unwrap();
        assert_eq!(spec.layers.len(), 8);
        assert_eq!(spec.tap_index().unwrap(), 5);
        let again = NetworkSpec::parse("x", &spec.to_text(), 5).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            NetworkSpec::parse("x", "conv 1 1 1 0\n", 0),
            Err(NetworkError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            NetworkSpec::parse("x", "input 8 8 1\nconv 1 1\n", 0),
            Err(NetworkError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            NetworkSpec::parse("x", "input 8 8 1\nsoftmax\n", 0),
            Err(NetworkError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            NetworkSpec::parse("x", "input 8 8 1\nconv 1 9 1 0\n", 0),
            Err(NetworkError::NonPositiveOutput { .. })
        ));
        assert!(matches!(NetworkSpec::parse("x", "", 0), Err(NetworkError::Parse { .. })));
    }
}
