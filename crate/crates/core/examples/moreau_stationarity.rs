//! Stationarity measures on a simplex-constrained fair classification
//! problem, where ∇Φ is unavailable and the Moreau envelope stands in.

use fedminimax::metrics::{moreau_stationarity_with, stationarity_report};
use fedminimax::problems::{DatasetSpec, FairClassification, MinimaxProblem, Vector};

fn main() -> fedminimax::Result<()> {
    let spec = DatasetSpec::GaussianClasses {
        num_classes: 3,
        feature_dim: 4,
        separation: 1.5,
        class_weights: None,
    };
    let problem = FairClassification::generate(&spec, 600, 4, 0.3, 1)?;
    let (x0, y0) = problem.initial_point();
    let lambda = 1.0 / (2.0 * problem.smoothness());
    println!("L = {:.3}, lambda = {lambda:.4}", problem.smoothness());

    // a class-dependent direction; equal weights for every class leave the loss unchanged
    for scale in [0.0, 0.5, 1.0, 2.0] {
        let x = Vector::from_fn(x0.len(), |i, _| scale * ((i % 7) as f64 - 3.0) / 4.0);
        let (value, prox) = moreau_stationarity_with(&problem, &x, Some(lambda), 1e-6)?;
        println!(
            "scale {scale}: ‖∇Φ_λ(x)‖ = {value:.4e}, ‖prox − x‖ = {:.4e}",
            (&prox - &x).norm()
        );
    }
    let report = stationarity_report(&problem, &x0, &y0, 1e-4, true)?;
    println!("report at the initial point: {report:?}");
    Ok(())
}
