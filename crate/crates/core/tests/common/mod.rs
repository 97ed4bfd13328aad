#![allow(dead_code)]

use fedminimax::problems::{
    AurocLinear, DatasetSpec, FairClassification, Matrix, QuadraticSaddle, QuadraticSpec, Vector,
};
use fedminimax::rng::{Purpose, Stream, StreamFactory};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> Stream {
    StreamFactory::new(seed).stream(0, Purpose::Diagnostics)
}

pub fn gaussian(dim: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

pub fn quadratic(clients: usize, noise_sigma: f64, heterogeneity: f64, seed: u64) -> QuadraticSaddle {
    QuadraticSaddle::generate(&QuadraticSpec {
        dim_x: 6,
        dim_y: 4,
        clients,
        kappa: 5.0,
        mu: 1.0,
        noise_sigma,
        heterogeneity,
        linear_scale: 1.0,
        hessian_spectrum: (-0.3, 0.1),
        seed,
    })
    .unwrap()
}

/// `f = ½ xᵀHx + ℓᵀx + xᵀBy − (μ/2)‖y‖²` with identical clients.
pub fn explicit_quadratic(h: Matrix, linear: Vector, b: Matrix, mu: f64, clients: usize) -> QuadraticSaddle {
    let d = h.nrows();
    QuadraticSaddle::new(h, linear, b, mu, 0.0, vec![Vector::zeros(d); clients]).unwrap()
}

pub fn fair(clients: usize, heterogeneity: f64, seed: u64) -> FairClassification {
    FairClassification::generate(
        &DatasetSpec::GaussianClasses {
            num_classes: 3,
            feature_dim: 4,
            separation: 1.5,
            class_weights: None,
        },
        300,
        clients,
        heterogeneity,
        seed,
    )
    .unwrap()
}

pub fn auroc(clients: usize, seed: u64) -> AurocLinear {
    AurocLinear::generate(
        &DatasetSpec::SeparableBinary {
            feature_dim: 4,
            positive_fraction: 0.2,
            margin: 0.2,
            condition: 1.0,
        },
        300,
        200,
        clients,
        0.5,
        seed,
    )
    .unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
