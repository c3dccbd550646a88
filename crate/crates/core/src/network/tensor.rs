use std::fmt;

/// Spatial and channel extent of an activation, `(height, width, channels)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape {
    pub const fn new(h: usize, w: usize, c: usize) -> Self {
        Self { h, w, c }
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.h, self.w, self.c)
    }
}

impl From<(usize, usize, usize)> for Shape {
    fn from((h, w, c): (usize, usize, usize)) -> Self {
        Self::new(h, w, c)
    }
}

/// Row-major `(h, w, c)` activation tensor. Input images use the same type
/// with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

pub type ImageTensor = Tensor;

impl Tensor {
    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    /// Returns `None` when `data.len()` disagrees with `shape`.
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Option<Self> {
        (data.len() == shape.len()).then_some(Self { shape, data })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for y in 0..shape.h {
            for x in 0..shape.w {
                for c in 0..shape.c {
                    data.push(f(y, x, c));
                }
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.shape.w + x) * self.shape.c + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn relu_in_place(&mut self) {
        for v in &mut self.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    /// Concatenates tensors of equal spatial extent along the channel axis.
    pub fn concat_channels(parts: &[Tensor]) -> Tensor {
        let (h, w) = (parts[0].shape.h, parts[0].shape.w);
        let c: usize = parts.iter().map(|p| p.shape.c).sum();
        let mut data = Vec::with_capacity(h * w * c);
        for pix in 0..h * w {
            for p in parts {
                let pc = p.shape.c;
                data.extend_from_slice(&p.data[pix * pc..(pix + 1) * pc]);
            }
        }
        Tensor {
            shape: Shape::new(h, w, c),
            data,
        }
    }
}
