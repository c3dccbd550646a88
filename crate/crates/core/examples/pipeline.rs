//! Full pipeline on a generated toy dataset: split, tapped features from a
//! preset network, SVM, ranked train/test AP and the four plot files.
//!
//! cargo run --release --example pipeline [-- <preset>]

use std::error::Error;

use matbench::dataset::synthetic_manifest;
use matbench::harness::{run_test, write_outputs, write_toy_dataset, TestSpec};

fn main() -> Result<(), Box<dyn Error>> {
    let arch = std::env::args().nth(1).unwrap_or_else(|| "vgg16-mini".into());
    let root = std::env::temp_dir().join("matbench-example-pipeline");
    let manifest = synthetic_manifest("toy", &[("glass", 12), ("metal", 12), ("wood", 12)], 20);
    let manifest_path = write_toy_dataset(&root.join("data"), &manifest, 32, 7)?;

    for category in ["glass", "metal", "wood"] {
        let spec = TestSpec::new(&arch, &manifest_path, category, &format!("{arch}_toy_{category}"));
        let report = run_test(&spec)?;
        let files = write_outputs(&report, &root.join("results"))?;
        println!(
            "{:<8} train AP {:.3}  test AP {:.3}  ({} ranked test images, {:.4} min)",
            category,
            report.train_ap.ap,
            report.test_ap.ap,
            report.test_ap.ranked.len(),
            report.wall_minutes
        );
        for f in files {
            println!("    {}", f.display());
        }
    }
    Ok(())
}
