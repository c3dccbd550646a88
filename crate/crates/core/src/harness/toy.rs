//! Synthetic image datasets laid out the way [`run_test`](super::run_test)
//! expects: `<dir>/manifest.txt`, `<dir>/<category>/<id>.ppm` and
//! `<dir>/negpool/<id>.ppm`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::save_toy_image;
use crate::dataset::{write_manifest, DatasetManifest, NEGATIVE_POOL_SOURCE};
use crate::network::{ImageTensor, Shape, Tensor};
use crate::rng::SplitMix64;

/// Per-category look: a base color and a stripe direction.
#[derive(Debug, Clone, Copy)]
struct Style {
    color: [f64; 3],
    vertical: bool,
}

fn style(rng: &mut SplitMix64, index: usize) -> Style {
    Style {
        color: [0.2 + 0.6 * rng.next_f64(), 0.2 + 0.6 * rng.next_f64(), 0.2 + 0.6 * rng.next_f64()],
        vertical: index.is_multiple_of(2),
    }
}

fn render(rng: &mut SplitMix64, side: usize, style: Option<Style>, noise: f64) -> ImageTensor {
    let phase = rng.below(4);
    let mut img = Tensor::from_fn(Shape::new(side, side, 3), |y, x, c| match style {
        Some(s) => {
            let t = if s.vertical { x } else { y };
            let stripe = if ((t + phase) / 2).is_multiple_of(2) { 0.15 } else { -0.15 };
            s.color[c] + stripe
        }
        None => 0.5,
    });
    for v in img.data_mut() {
        *v = (*v + noise * (2.0 * rng.next_f64() - 1.0)).clamp(0.0, 1.0);
    }
    img
}

/// Writes one `side × side` RGB image per manifest entry plus the manifest
/// itself, and returns the manifest path. Images of the same category share
/// a color and stripe orientation; pool images are gray noise.
pub fn write_toy_dataset(dir: &Path, manifest: &DatasetManifest, side: usize, seed: u64) -> io::Result<PathBuf> {
    let mut rng = SplitMix64::new(seed);
    for (i, cat) in manifest.categories.iter().enumerate() {
        let st = style(&mut rng, i);
        let cat_dir = dir.join(&cat.name);
        fs::create_dir_all(&cat_dir)?;
        for id in &cat.image_ids {
            save_toy_image(&cat_dir.join(format!("{id}.ppm")), &render(&mut rng, side, Some(st), 0.08))?;
        }
    }
    let pool_dir = dir.join(NEGATIVE_POOL_SOURCE);
    fs::create_dir_all(&pool_dir)?;
    for id in &manifest.negative_pool {
        save_toy_image(&pool_dir.join(format!("{id}.ppm")), &render(&mut rng, side, None, 0.4))?;
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, write_manifest(manifest))?;
    Ok(path)
}
