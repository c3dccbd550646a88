//! Ranking, precision-recall, AP, mAP and the common-ground filter.
//!
//! cargo run --example ranking_metrics

use matbench::evaluation::{
    average_precision, common_ground_filter, format_percent, mean_ap, rank, top_n, ScoredImage, DEFAULT_TOP_N,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ranked = rank(vec![
        ScoredImage::new("b", 0.4, false),
        ScoredImage::new("a", 0.9, true),
        ScoredImage::new("d", 0.4, true),
        ScoredImage::new("c", -0.2, false),
        ScoredImage::new("e", 0.7, true),
    ]);
    let report = average_precision(&ranked)?;
    print!("{}", report.curve.to_csv());
    println!("AP = {:.4}", report.ap);
    println!("top {DEFAULT_TOP_N}: {} items", top_n(&ranked, DEFAULT_TOP_N).len());

    let per_category = [
        ("fabric", 0.7107),
        ("foliage", 0.9),
        ("glass", 0.9403),
        ("metal", 0.863),
        ("paper", 0.9057),
        ("plastic", 0.8725),
        ("wood", 0.8687),
    ];
    println!("mAP over all categories: {}", format_percent(mean_ap(&per_category)?));
    let common = common_ground_filter(&per_category)?;
    println!("mAP over the common six: {}", format_percent(mean_ap(&common)?));
    Ok(())
}
