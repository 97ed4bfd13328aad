mod common;

use common::{auroc, explicit_quadratic, fair, gaussian, quadratic, rng};
use fedminimax::metrics::{estimate_assumption_constants, estimate_heterogeneity};
use fedminimax::problems::{
    exact_full_grads, full_value, inner_maximizer, make_heterogeneous_shards, project_y, sample_partial_grads,
    DatasetSpec, Matrix, MinimaxProblem, Vector,
};
use fedminimax::Error;

fn unbiased_within_three_se<P: MinimaxProblem>(problem: &P, client: usize, x: &Vector, y: &Vector, seed: u64) {
    let draws = 10_000;
    let mut r = rng(seed);
    let dim = problem.dim_x() + problem.dim_y();
    let mut sum = Vector::zeros(dim);
    let mut sum_sq = Vector::zeros(dim);
    for _ in 0..draws {
        let (gx, gy) = sample_partial_grads(problem, client, x, y, 1, &mut r).unwrap();
        let g = Vector::from_iterator(dim, gx.iter().chain(gy.iter()).copied());
        sum += &g;
        sum_sq += g.component_mul(&g);
    }
    let n = draws as f64;
    let mean = &sum / n;
    let var = (&sum_sq / n - mean.component_mul(&mean)) * (n / (n - 1.0));
    let se2 = var.sum() / n;
    let (ex, ey) = problem.client_grads(client, x, y);
    let exact = Vector::from_iterator(dim, ex.iter().chain(ey.iter()).copied());
    let err = (&mean - &exact).norm();
    assert!(
        err <= 3.0 * se2.sqrt(),
        "{}: error {err:.3e}, 3 SE {:.3e}",
        problem.name(),
        3.0 * se2.sqrt()
    );
}

#[test]
fn minibatch_gradients_are_unbiased() {
    let q = quadratic(3, 0.5, 1.0, 1);
    let f = fair(3, 1.0, 1);
    let a = auroc(3, 1);
    let mut r = rng(100);
    unbiased_within_three_se(&q, 1, &gaussian(6, &mut r), &gaussian(4, &mut r), 1);
    let fy = project_y(&f, &gaussian(3, &mut r).abs());
    unbiased_within_three_se(&f, 2, &gaussian(15, &mut r), &fy, 2);
    unbiased_within_three_se(&a, 0, &gaussian(6, &mut r), &gaussian(1, &mut r), 3);
}

#[test]
fn exact_gradients_average_the_client_full_batches() {
    let a = auroc(4, 2);
    let mut r = rng(2);
    let (x, y) = (gaussian(6, &mut r), gaussian(1, &mut r));
    let (gx, gy) = exact_full_grads(&a, &x, &y).unwrap();
    let mut sx = Vector::zeros(6);
    let mut sy = Vector::zeros(1);
    for c in 0..4 {
        let (cx, cy) = a.batch_grads(c, &x, &y, &a.full_batch(c));
        sx += cx;
        sy += cy;
    }
    assert!((gx - sx / 4.0).norm() < 1e-14);
    assert!((gy - sy / 4.0).norm() < 1e-14);
}

#[test]
fn quadratic_y_gradient_and_origin() {
    let q = quadratic(2, 0.0, 1.0, 3);
    let mut r = rng(3);
    let (x, y) = (gaussian(6, &mut r), gaussian(4, &mut r));
    let (_, gy) = exact_full_grads(&q, &x, &y).unwrap();
    let expected = q.coupling().transpose() * &x - &y * q.mu();
    assert!((gy - expected).norm() < 1e-12);

    let id = explicit_quadratic(Matrix::zeros(2, 2), Vector::zeros(2), Matrix::identity(2, 2), 1.0, 1);
    let (gx, gy) = sample_partial_grads(&id, 0, &Vector::zeros(2), &Vector::zeros(2), 5, &mut r).unwrap();
    assert_eq!(gx, Vector::zeros(2));
    assert_eq!(gy, Vector::zeros(2));
}

#[test]
fn quadratic_inner_maximizer_zeroes_the_y_gradient() {
    let q = quadratic(4, 0.0, 1.0, 4);
    let mut r = rng(4);
    for _ in 0..100 {
        let x = gaussian(6, &mut r) * 3.0;
        let y = inner_maximizer(&q, &x).unwrap();
        let (_, gy) = exact_full_grads(&q, &x, &y).unwrap();
        assert!(gy.norm() <= 1e-10);
    }
    let id = explicit_quadratic(Matrix::zeros(2, 2), Vector::zeros(2), Matrix::identity(2, 2), 1.0, 1);
    assert_eq!(
        inner_maximizer(&id, &Vector::from_vec(vec![1.0, 2.0])).unwrap(),
        Vector::from_vec(vec![1.0, 2.0])
    );
}

#[test]
fn fair_has_no_closed_form_maximizer() {
    let f = fair(2, 1.0, 5);
    assert!(matches!(
        inner_maximizer(&f, &Vector::zeros(15)),
        Err(Error::Unavailable(_))
    ));
}

#[test]
fn auroc_maximizer_matches_grid_search() {
    let a = auroc(3, 6);
    let mut r = rng(6);
    for _ in 0..10 {
        let x = gaussian(6, &mut r);
        let w = inner_maximizer(&a, &x).unwrap()[0];
        let value = |w: f64| full_value(&a, &x, &Vector::from_element(1, w));
        let (mut lo, mut hi) = (-100.0f64, 100.0f64);
        for _ in 0..40 {
            let grid: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
            let best = grid
                .iter()
                .copied()
                .max_by(|p, q| value(*p).total_cmp(&value(*q)))
                .unwrap();
            let width = (hi - lo) / 200.0;
            (lo, hi) = (best - width, best + width);
        }
        assert!(
            (w - 0.5 * (lo + hi)).abs() < 1e-6,
            "closed form {w}, grid {}",
            0.5 * (lo + hi)
        );
    }
}

#[test]
fn smoothness_bounds_dominate_probed_curvature() {
    let mut r = rng(7);
    let f = fair(4, 0.3, 7);
    let a = auroc(4, 7);
    let q = quadratic(4, 0.0, 1.0, 7);
    // the AUROC bound is a per-sample worst case and is not expected to be tight
    for (name, bound, probed, tight) in [
        (
            "fair",
            f.smoothness(),
            estimate_assumption_constants(&f, 10, &mut r).unwrap().l_hat,
            true,
        ),
        (
            "auroc",
            a.smoothness(),
            estimate_assumption_constants(&a, 10, &mut r).unwrap().l_hat,
            false,
        ),
        (
            "quadratic",
            q.smoothness(),
            estimate_assumption_constants(&q, 10, &mut r).unwrap().l_hat,
            true,
        ),
    ] {
        assert!(
            probed <= bound * (1.0 + 1e-6),
            "{name}: probed {probed} exceeds bound {bound}"
        );
        if tight {
            assert!(
                probed >= 0.1 * bound,
                "{name}: bound {bound} is far from probed {probed}"
            );
        }
    }
}

#[test]
fn fair_objective_is_linear_on_the_simplex() {
    let f = fair(3, 0.5, 8);
    let mut r = rng(8);
    for _ in 0..20 {
        let x = gaussian(15, &mut r);
        let y1 = project_y(&f, &gaussian(3, &mut r));
        let y2 = project_y(&f, &gaussian(3, &mut r));
        let t: f64 = rand::Rng::random(&mut r);
        let mix = &y1 * t + &y2 * (1.0 - t);
        let lhs = full_value(&f, &x, &mix);
        let rhs = t * full_value(&f, &x, &y1) + (1.0 - t) * full_value(&f, &x, &y2);
        assert!((lhs - rhs).abs() <= 1e-10);
    }
}

#[test]
fn projection_examples() {
    let f = fair(2, 1.0, 9);
    let p = project_y(&f, &Vector::from_vec(vec![0.3, 0.7, 0.5]));
    let expected = Vector::from_vec(vec![0.4 / 3.0, 1.6 / 3.0, 1.0 / 3.0]);
    assert!((p - expected).norm() < 1e-12);
    let q = quadratic(1, 0.0, 0.0, 9);
    let y = Vector::from_vec(vec![2.0, -1.0, 0.5, 7.0]);
    assert_eq!(project_y(&q, &y), y);
}

#[test]
fn bad_calls_are_rejected() {
    let q = quadratic(2, 0.1, 1.0, 10);
    let mut r = rng(10);
    let bad_x = Vector::zeros(5);
    assert!(matches!(
        sample_partial_grads(&q, 0, &bad_x, &Vector::zeros(4), 1, &mut r),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        sample_partial_grads(&q, 2, &Vector::zeros(6), &Vector::zeros(4), 1, &mut r),
        Err(Error::InvalidArgument(_))
    ));
    let spec = DatasetSpec::GaussianClasses {
        num_classes: 2,
        feature_dim: 2,
        separation: 1.0,
        class_weights: None,
    };
    assert!(make_heterogeneous_shards(&spec, 3, 4, 1.0, 0).is_err());
    assert!(make_heterogeneous_shards(&spec, 30, 4, -0.5, 0).is_err());
}

#[test]
fn label_skew_raises_measured_heterogeneity() {
    let (mut skewed, mut iid) = (0.0, 0.0);
    for seed in 0..20 {
        let mut r = rng(1000 + seed);
        skewed += estimate_heterogeneity(&fair(4, 0.1, seed), 3, &mut r);
        let mut r = rng(1000 + seed);
        iid += estimate_heterogeneity(&fair(4, 100.0, seed), 3, &mut r);
    }
    assert!(skewed > iid, "zeta^2 at 0.1: {skewed}, at 100: {iid}");
}

#[test]
fn large_concentration_matches_global_label_frequencies() {
    let spec = DatasetSpec::GaussianClasses {
        num_classes: 3,
        feature_dim: 2,
        separation: 1.0,
        class_weights: Some(vec![0.5, 0.3, 0.2]),
    };
    let shards = make_heterogeneous_shards(&spec, 3000, 2, 1e6, 4).unwrap();
    for shard in &shards {
        for (c, global) in [0.5, 0.3, 0.2].into_iter().enumerate() {
            let freq = shard.labels.iter().filter(|&&l| l == c as i64).count() as f64 / shard.len() as f64;
            assert!(
                (freq - global).abs() <= 0.02,
                "client {} class {c}: {freq}",
                shard.client_id
            );
        }
    }
}
