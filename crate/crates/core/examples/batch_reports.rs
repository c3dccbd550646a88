//! A batch of tests through a plan file, followed by the report layouts and
//! the timing table.
//!
//! cargo run --release --example batch_reports

use std::fs;

use matbench::dataset::synthetic_manifest;
use matbench::harness::{
    emit_report, parse_plan, run_batch, summary_csv, write_outputs, write_toy_dataset, ReportLayout,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("matbench-example-batch");
    let cats = ["fabric", "glass", "metal", "paper", "plastic", "wood"];
    let sizes: Vec<(&str, usize)> = cats.iter().map(|c| (*c, 8)).collect();
    for (name, seed) in [("toyA", 1), ("toyB", 2)] {
        write_toy_dataset(&root.join(name), &synthetic_manifest(name, &sizes, 8), 32, seed)?;
    }

    let mut plan = String::from("# arch × dataset × category\n");
    for arch in ["vggf-mini", "googlenet-mini"] {
        for ds in ["toyA", "toyB"] {
            for cat in cats {
                plan.push_str(&format!(
                    "run --arch {arch} --dataset {ds}/manifest.txt --category {cat} --test-name {arch}_{ds}_{cat}\n"
                ));
            }
        }
    }
    plan.push_str("run --arch vggf-mini --dataset toyA/manifest.txt --category stone --test-name broken\n");
    let specs = parse_plan(&plan, &root)?;

    let batch = run_batch(&specs, 2)?;
    let out = root.join("results");
    for (spec, result) in specs.iter().zip(&batch.results) {
        match result {
            Ok(report) => {
                write_outputs(report, &out)?;
            }
            Err(e) => println!("{} failed: {e}", spec.test_name),
        }
    }
    let rows = batch.rows();
    fs::write(out.join("summary.csv"), summary_csv(&rows))?;

    for layout in [ReportLayout::PerCategoryTable, ReportLayout::MapSummary, ReportLayout::CommonGround] {
        println!("\n{layout:?}\n{}", emit_report(&rows, layout)?);
    }
    println!("Timings (minutes)\n{}", batch.timing.to_csv());
    println!("outputs under {}", out.display());
    Ok(())
}
