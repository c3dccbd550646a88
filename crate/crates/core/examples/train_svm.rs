//! Training the soft-margin linear SVM with both solvers.
//!
//! cargo run --release --example train_svm

use matbench::features::FeatureVector;
use matbench::svm::{hinge_objective, train_with_trace, LinearModel, Solver, TrainConfig, TrainingLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points = [
        ([0.5, 0.2], true),
        ([0.9, -0.3], true),
        ([0.1, 0.8], true),
        ([1.2, 0.4], true),
        ([-0.4, -0.6], false),
        ([-0.7, 0.1], false),
        ([0.2, -0.9], false),
        ([-1.0, -0.2], false),
    ];
    let data: Vec<(FeatureVector, TrainingLabel)> = points
        .iter()
        .enumerate()
        .map(|(i, (x, pos))| {
            let label = if *pos { TrainingLabel::Positive } else { TrainingLabel::Negative };
            (FeatureVector::new(format!("p{i}"), x.to_vec()), label)
        })
        .collect();

    for solver in [Solver::Smo, Solver::Subgradient] {
        let cfg = TrainConfig { solver, ..TrainConfig::default() };
        let (model, trace) = train_with_trace(&data, &cfg)?;
        println!(
            "{solver:?}: w = {:?}, b = {:.4}, J = {:.4}, converged = {}, {} epochs",
            model.weights.iter().map(|w| (w * 1e4).round() / 1e4).collect::<Vec<_>>(),
            model.bias,
            hinge_objective(&model, &data, cfg.c)?,
            trace.converged,
            trace.epoch_objective.len()
        );
        for (h, y) in data.iter().take(2) {
            println!("    score({}) = {:+.3} (label {:+})", h.source_image, model.score(h)?, y.value());
        }
        let reread = LinearModel::read(model.to_text().as_bytes())?;
        assert_eq!(reread, model);
    }
    Ok(())
}
