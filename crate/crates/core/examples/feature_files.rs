//! Writing, reading and normalizing feature vectors in the FVEC format.
//!
//! cargo run --example feature_files

use matbench::features::{l2_normalize, read_features, write_features, FeatureRecord, RecordLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        FeatureRecord::new("glass/img_001", RecordLabel::Positive, vec![3.0, 4.0, 0.1]),
        FeatureRecord::new("wood/img_007", RecordLabel::Negative, vec![-1.0, 0.25, 1e-7]),
        FeatureRecord::new("negpool/animal_3", RecordLabel::Unlabeled, vec![0.0, 0.0, 0.0]),
    ];
    let mut buf = Vec::new();
    let bytes = write_features(&records, &mut buf)?;
    print!("{bytes} bytes:\n{}", String::from_utf8_lossy(&buf));

    let back = read_features(buf.as_slice())?;
    assert_eq!(back, records);
    for rec in &back {
        let unit = l2_normalize(&rec.vector);
        println!("{:<18} |h| = {:.4} -> {:.4}", rec.image_id, rec.vector.norm(), unit.norm());
    }

    let err = read_features("FVEC 2 1\nx 1 0.5\n".as_bytes()).unwrap_err();
    println!("short record: {err}");
    Ok(())
}
