//! Minimal binary PNM (P5 grayscale / P6 RGB, maxval 255) reader and writer.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::network::{ImageTensor, Shape, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("unsupported image format (only binary P5/P6 with maxval 255)")]
    UnsupportedFormat,
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("io error: {0}")]
    Io(String),
}

pub fn load_toy_image(path: &Path) -> Result<ImageTensor, ImageError> {
    let bytes = fs::read(path).map_err(|e| ImageError::Io(format!("{}: {e}", path.display())))?;
    decode_pnm(&bytes)
}

pub fn decode_pnm(bytes: &[u8]) -> Result<ImageTensor, ImageError> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(ImageError::UnsupportedFormat),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Whitespace and `#` comments may separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(ImageError::CorruptHeader("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::CorruptHeader(format!("expected a number at byte {start}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| ImageError::CorruptHeader(format!("number `{text}` out of range")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat);
    }
    if width == 0 || height == 0 {
        return Err(ImageError::CorruptHeader("zero image dimension".into()));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ImageError::CorruptHeader("missing whitespace before pixel data".into()));
    }
    pos += 1;
    let shape = Shape::new(height, width, channels);
    let pixels = &bytes[pos..];
    if pixels.len() < shape.len() {
        return Err(ImageError::CorruptHeader(format!(
            "expected {} pixel bytes, found {}",
            shape.len(),
            pixels.len()
        )));
    }
    let data = pixels[..shape.len()].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Tensor::from_vec(shape, data).expect("length checked"))
}

/// Encodes a 1- or 3-channel tensor with values in [0, 1] as P5/P6.
pub fn encode_pnm(image: &ImageTensor) -> Vec<u8> {
    let s = image.shape();
    let magic = if s.c == 1 { "P5" } else { "P6" };
    assert!(s.c == 1 || s.c == 3, "PNM needs 1 or 3 channels");
    let mut out = format!("{magic}\n{} {}\n255\n", s.w, s.h).into_bytes();
    out.extend(image.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn save_toy_image(path: &Path, image: &ImageTensor) -> std::io::Result<()> {
    fs::write(path, encode_pnm(image))
}
