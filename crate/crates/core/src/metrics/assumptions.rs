//! Probe-based estimates of the constants in the standing assumptions:
//! variance bound `σ²`, heterogeneity `ζ²`, smoothness `L`, PL modulus `μ`
//! and the gradient bound `G_x`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::primal_dual_gap;
use crate::problems::{full_grads, project_y, MinimaxProblem, Vector, YConstraint};
use crate::rng::Stream;

/// Single-sample draws per (probe, client) in the variance estimate.
pub const VARIANCE_DRAWS: usize = 128;
const POWER_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionEstimates {
    pub sigma2_hat: f64,
    pub zeta2_hat: f64,
    pub l_hat: f64,
    /// 0 when no probe certifies a positive PL modulus (constrained `y`).
    pub mu_hat: f64,
    /// `max ‖∇_x F‖` over the probes.
    pub gx_hat: f64,
}

/// `(1/N) Σ_i ‖∇f_i(x, y) − ∇F(x, y)‖²` over both blocks.
pub fn client_dispersion<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector) -> f64 {
    let n = problem.num_clients();
    let (gx, gy) = full_grads(problem, x, y);
    let mut total = 0.0;
    for client in 0..n {
        let (cx, cy) = problem.client_grads(client, x, y);
        total += (cx - &gx).norm_squared() + (cy - &gy).norm_squared();
    }
    total / n as f64
}

fn gaussian(dim: usize, rng: &mut Stream) -> Vector {
    Vector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

fn probe<P: MinimaxProblem + ?Sized>(problem: &P, rng: &mut Stream) -> (Vector, Vector) {
    let x = gaussian(problem.dim_x(), rng);
    let y = project_y(problem, &gaussian(problem.dim_y(), rng));
    (x, y)
}

/// `ζ̂²`: the largest client dispersion over random probes.
pub fn estimate_heterogeneity<P: MinimaxProblem + ?Sized>(problem: &P, probe_count: usize, rng: &mut Stream) -> f64 {
    (0..probe_count)
        .map(|_| {
            let (x, y) = probe(problem, rng);
            client_dispersion(problem, &x, &y)
        })
        .fold(0.0, f64::max)
}

fn joint_grad<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector) -> Vector {
    let (gx, gy) = full_grads(problem, x, y);
    let mut out = Vector::zeros(gx.len() + gy.len());
    out.rows_mut(0, gx.len()).copy_from(&gx);
    out.rows_mut(gx.len(), gy.len()).copy_from(&gy);
    out
}

fn split(problem_dim_x: usize, p: &Vector) -> (Vector, Vector) {
    let dx = problem_dim_x;
    (p.rows(0, dx).into_owned(), p.rows(dx, p.len() - dx).into_owned())
}

/// Largest Jacobian gain of the gradient map near `p`, by finite-difference
/// power iteration (the Jacobian of `(∇_x F, ∇_y F)` is symmetric).
fn local_lipschitz<P: MinimaxProblem + ?Sized>(problem: &P, p: &Vector, rng: &mut Stream) -> f64 {
    let dx = problem.dim_x();
    let constrained = problem.y_constraint() != YConstraint::Unconstrained;
    let (x, y) = split(dx, p);
    let base = joint_grad(problem, &x, &y);
    let eps = 1e-4 * (1.0 + p.norm());
    let mut dir = gaussian(p.len(), rng);
    if constrained {
        // stay on the affine hull of the simplex
        let tail = dir.rows(dx, p.len() - dx).mean();
        dir.rows_mut(dx, p.len() - dx).add_scalar_mut(-tail);
    }
    let mut gain = 0.0f64;
    for _ in 0..POWER_STEPS {
        let norm = dir.norm();
        if norm == 0.0 {
            break;
        }
        dir /= norm;
        let (xs, ys) = split(dx, &(p + &dir * eps));
        let mut image = (joint_grad(problem, &xs, &ys) - &base) / eps;
        gain = gain.max(image.norm());
        if constrained {
            let tail = image.rows(dx, p.len() - dx).mean();
            image.rows_mut(dx, p.len() - dx).add_scalar_mut(-tail);
        }
        dir = image;
    }
    gain
}

/// Probe estimates of `σ²`, `ζ²`, `L`, `μ` and `G_x`.
pub fn estimate_assumption_constants<P: MinimaxProblem + ?Sized>(
    problem: &P,
    probe_count: usize,
    rng: &mut Stream,
) -> Result<AssumptionEstimates> {
    if probe_count < 2 {
        return Err(Error::InvalidArgument("probe_count must be at least 2".into()));
    }
    let n = problem.num_clients();
    let dx = problem.dim_x();
    let mut est = AssumptionEstimates {
        sigma2_hat: 0.0,
        zeta2_hat: 0.0,
        l_hat: 0.0,
        mu_hat: f64::INFINITY,
        gx_hat: 0.0,
    };
    let mut previous: Option<(Vector, Vector)> = None;
    for _ in 0..probe_count {
        let (x, y) = probe(problem, rng);

        for client in 0..n {
            let (ex, ey) = problem.client_grads(client, &x, &y);
            let mut acc = 0.0;
            for _ in 0..VARIANCE_DRAWS {
                let batch = problem.draw_batch(client, 1, rng)?;
                let (gx, gy) = problem.batch_grads(client, &x, &y, &batch);
                acc += (gx - &ex).norm_squared() + (gy - &ey).norm_squared();
            }
            est.sigma2_hat = est.sigma2_hat.max(acc / VARIANCE_DRAWS as f64);
        }
        est.zeta2_hat = est.zeta2_hat.max(client_dispersion(problem, &x, &y));

        let grad = joint_grad(problem, &x, &y);
        est.gx_hat = est.gx_hat.max(grad.rows(0, dx).norm());
        let mut p = Vector::zeros(grad.len());
        p.rows_mut(0, dx).copy_from(&x);
        p.rows_mut(dx, y.len()).copy_from(&y);
        est.l_hat = est.l_hat.max(local_lipschitz(problem, &p, rng));
        if let Some((q, gq)) = &previous {
            let dist = (&p - q).norm();
            if dist > 0.0 {
                est.l_hat = est.l_hat.max((&grad - gq).norm() / dist);
            }
        }

        if problem.y_constraint() == YConstraint::Unconstrained {
            match primal_dual_gap(problem, &x, &y, 1e-10) {
                Ok(gap) if gap > 1e-12 => {
                    let gy = grad.rows(dx, y.len()).norm_squared();
                    est.mu_hat = est.mu_hat.min(gy / (2.0 * gap));
                }
                Ok(_) | Err(Error::Unavailable(_)) | Err(Error::NotConverged { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        previous = Some((p, grad));
    }
    if !est.mu_hat.is_finite() {
        est.mu_hat = 0.0;
    }
    Ok(est)
}
