//! Empirical smoothness, strong concavity, noise and heterogeneity of each
//! problem family, probed at random points.

use fedminimax::metrics::estimate_assumption_constants;
use fedminimax::problems::{
    AurocLinear, DatasetSpec, FairClassification, MinimaxProblem, QuadraticSaddle, QuadraticSpec,
};
use fedminimax::rng::{Purpose, StreamFactory};

fn show(problem: &dyn MinimaxProblem) -> fedminimax::Result<()> {
    let mut rng = StreamFactory::new(0).stream(0, Purpose::Diagnostics);
    let est = estimate_assumption_constants(problem, 20, &mut rng)?;
    println!(
        "{:>10}: L bound {:.3}, L probed {:.3}, mu {:.3}, sigma^2 {:.3e}, zeta^2 {:.3e}, G_x {:.3}",
        problem.name(),
        problem.smoothness(),
        est.l_hat,
        est.mu_hat,
        est.sigma2_hat,
        est.zeta2_hat,
        est.gx_hat
    );
    Ok(())
}

fn main() -> fedminimax::Result<()> {
    let quadratic = QuadraticSaddle::generate(&QuadraticSpec {
        dim_x: 20,
        dim_y: 20,
        clients: 8,
        kappa: 10.0,
        mu: 1.0,
        noise_sigma: 0.1,
        heterogeneity: 1.0,
        linear_scale: 1.0,
        hessian_spectrum: (-0.3, 0.1),
        seed: 7,
    })?;
    let classes = DatasetSpec::GaussianClasses {
        num_classes: 3,
        feature_dim: 5,
        separation: 1.5,
        class_weights: None,
    };
    let fair = FairClassification::generate(&classes, 2400, 8, 0.3, 11)?;
    let binary = DatasetSpec::SeparableBinary {
        feature_dim: 10,
        positive_fraction: 0.2,
        margin: 0.2,
        condition: 30.0,
    };
    let auroc = AurocLinear::generate(&binary, 4000, 2000, 8, 0.5, 5)?;
    show(&quadratic)?;
    show(&fair)?;
    show(&auroc)
}
