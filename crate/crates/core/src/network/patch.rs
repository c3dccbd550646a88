use super::tensor::{ImageTensor, Shape, Tensor};
use super::NetworkError;

/// Pixel window `[x0, x0 + side) x [y0, y0 + side)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub x0: usize,
    pub y0: usize,
    pub side: usize,
}

/// Square window of side `round(scale * min(h, w))` centered on
/// `(cx, cy)` and shifted to lie inside the image.
pub fn patch_window(image: Shape, center: (f64, f64), scale: f64) -> Result<CropWindow, NetworkError> {
    let (cx, cy) = center;
    if !(cx.is_finite() && cy.is_finite())
        || cx < 0.0
        || cy < 0.0
        || cx >= image.w as f64
        || cy >= image.h as f64
    {
        return Err(NetworkError::CenterOutOfBounds { x: cx, y: cy, shape: image });
    }
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(NetworkError::InvalidScale(scale));
    }
    let side = (scale * image.h.min(image.w) as f64).round() as usize;
    if side < 1 {
        return Err(NetworkError::DegeneratePatch { scale });
    }
    let start = |c: f64, extent: usize| -> usize {
        let raw = (c - side as f64 / 2.0).floor();
        raw.clamp(0.0, (extent - side) as f64) as usize
    };
    Ok(CropWindow {
        x0: start(cx, image.w),
        y0: start(cy, image.h),
        side,
    })
}

pub fn crop(image: &Tensor, win: CropWindow) -> Tensor {
    let c = image.shape().c;
    Tensor::from_fn(Shape::new(win.side, win.side, c), |y, x, ch| {
        image.get(win.y0 + y, win.x0 + x, ch)
    })
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize_bilinear(image: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let ins = image.shape();
    let axis = |dst: usize, out: usize, inp: usize| -> (usize, usize, f64) {
        let src = ((dst as f64 + 0.5) * inp as f64 / out as f64 - 0.5).clamp(0.0, (inp - 1) as f64);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(inp - 1);
        (lo, hi, src - lo as f64)
    };
    Tensor::from_fn(Shape::new(out_h, out_w, ins.c), |y, x, c| {
        let (y0, y1, fy) = axis(y, out_h, ins.h);
        let (x0, x1, fx) = axis(x, out_w, ins.w);
        let top = image.get(y0, x0, c) * (1.0 - fx) + image.get(y0, x1, c) * fx;
        let bottom = image.get(y1, x0, c) * (1.0 - fx) + image.get(y1, x1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Crops the patch around `center` (x = column, y = row) and resizes it to
/// `out_h x out_w`.
pub fn extract_patch(
    image: &ImageTensor,
    center: (f64, f64),
    scale: f64,
    out_h: usize,
    out_w: usize,
) -> Result<ImageTensor, NetworkError> {
    let win = patch_window(image.shape(), center, scale)?;
    Ok(resize_bilinear(&crop(image, win), out_h, out_w))
}
