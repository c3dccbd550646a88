//! Positive/negative train/test split of one category.
//!
//! cargo run --example split_plan

use matbench::dataset::{build_split, load_manifest, synthetic_manifest, write_manifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Seven categories of 100 images and a shared 100-image negative pool.
    let names = ["fabric", "foliage", "glass", "leather", "metal", "paper", "wood"];
    let cats: Vec<(&str, usize)> = names.iter().map(|c| (*c, 100)).collect();
    let text = write_manifest(&synthetic_manifest("ImageNet7", &cats, 100));
    let manifest = load_manifest(text.as_bytes())?;

    for fraction in [0.1, 0.5] {
        let plan = build_split(&manifest, "fabric", fraction)?;
        println!(
            "fraction {fraction}: pos_train {}, pos_test {}, neg_train {}, neg_test {}",
            plan.pos_train.len(),
            plan.pos_test.len(),
            plan.neg_train.len(),
            plan.neg_test.len()
        );
        let first = &plan.neg_train[0];
        println!("  first negative: {}/{}", first.source, first.image_id);
    }

    let err = build_split(&synthetic_manifest("short", &[("a", 40), ("b", 4)], 5), "a", 0.1).unwrap_err();
    println!("pool too short: {err}");
    Ok(())
}
