//! `‖∇Φ‖`, Moreau-envelope stationarity and the primal–dual gap, where
//! `Φ(x) = max_{y ∈ Y} F(x, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{full_grads, full_value, project_y, MinimaxProblem, Vector, YConstraint};

/// Iteration cap of every iterative metric solver.
pub const SOLVER_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationarityMethod {
    ClosedForm,
    InnerSolver,
    ProximalSolver,
}

/// How `y*(x)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    /// Closed form when the problem offers one, otherwise the ascent solver.
    Auto,
    /// Always run the ascent solver.
    Solver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub grad_phi_norm: Option<f64>,
    pub moreau_grad_norm: Option<f64>,
    pub primal_dual_gap: Option<f64>,
    pub method: StationarityMethod,
}

/// `Φ(x)`, a (sub)gradient `∇_x F(x, y*)` and the maximizer used.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEval {
    pub value: f64,
    pub grad: Vector,
    pub y_star: Vector,
    pub method: StationarityMethod,
}

/// Maximizes `F(x, ·)` over the feasible set by (projected) gradient ascent
/// with step `1/L`, stopping when the gradient mapping norm is at most `tol`.
/// Returns the maximizer and the number of iterations used.
pub fn solve_inner_max<P: MinimaxProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    y_start: &Vector,
    tol: f64,
) -> Result<(Vector, usize)> {
    let step = 1.0 / problem.smoothness();
    let mut y = project_y(problem, y_start);
    let mut residual = f64::INFINITY;
    for it in 0..SOLVER_CAP {
        let (_, gy) = full_grads(problem, x, &y);
        match problem.y_constraint() {
            YConstraint::Unconstrained => {
                residual = gy.norm();
                if residual <= tol {
                    return Ok((y, it));
                }
                y.axpy(step, &gy, 1.0);
            }
            YConstraint::Simplex => {
                let next = project_y(problem, &(&y + &gy * step));
                residual = (&next - &y).norm() / step;
                y = next;
                if residual <= tol {
                    return Ok((y, it));
                }
            }
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::NotConverged {
        solver: "inner maximization",
        iterations: SOLVER_CAP,
        residual,
    })
}

/// Evaluates `Φ` and `∇_x F(x, y*(x))` at `x`.
///
/// The solver path stops once `‖∇_y F‖ ≤ tol·μ`, which keeps `‖ŷ − y*‖ ≤ tol`
/// under the PL / strong-concavity modulus `μ`.
pub fn phi_eval<P: MinimaxProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    tol: f64,
    method: InnerMethod,
    warm_start: Option<&Vector>,
) -> Result<PhiEval> {
    if x.len() != problem.dim_x() {
        return Err(Error::InvalidArgument("x has wrong dimension".into()));
    }
    if method == InnerMethod::Auto {
        if let Some(y_star) = problem.inner_maximizer(x) {
            let (grad, _) = full_grads(problem, x, &y_star);
            let value = full_value(problem, x, &y_star);
            return Ok(PhiEval {
                value,
                grad,
                y_star,
                method: StationarityMethod::ClosedForm,
            });
        }
    }
    let start = match warm_start {
        Some(y) => y.clone(),
        None => problem.initial_point().1,
    };
    let mu = problem.strong_concavity().unwrap_or(1.0);
    let (y_star, _) = solve_inner_max(problem, x, &start, tol * mu)?;
    let (grad, _) = full_grads(problem, x, &y_star);
    let value = match (method, problem.phi_value(x)) {
        (InnerMethod::Auto, Some(v)) => v,
        _ => full_value(problem, x, &y_star),
    };
    Ok(PhiEval {
        value,
        grad,
        y_star,
        method: StationarityMethod::InnerSolver,
    })
}

/// `‖∇Φ(x)‖` for problems whose `Φ` is smooth (unconstrained `y`, PL or
/// strongly concave).
pub fn grad_phi<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, tol: f64) -> Result<(f64, StationarityMethod)> {
    grad_phi_with(problem, x, tol, InnerMethod::Auto)
}

pub fn grad_phi_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    tol: f64,
    method: InnerMethod,
) -> Result<(f64, StationarityMethod)> {
    if problem.y_constraint() != YConstraint::Unconstrained {
        return Err(Error::Unavailable(format!(
            "{}: Φ is nonsmooth under a constrained y; use the Moreau stationarity",
            problem.name()
        )));
    }
    let eval = phi_eval(problem, x, tol, method, None)?;
    Ok((eval.grad.norm(), eval.method))
}

/// `Φ(x) − F(x, y)`.
pub fn primal_dual_gap<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector, tol: f64) -> Result<f64> {
    let phi = match problem.phi_value(x) {
        Some(v) => v,
        None => phi_eval(problem, x, tol, InnerMethod::Auto, Some(y))?.value,
    };
    Ok(phi - full_value(problem, x, y))
}

/// `‖∇Φ_λ(x)‖ = ‖x − prox_{λΦ}(x)‖ / λ`, with `λ = 1/(2L)` by default.
///
/// `tol` bounds the error of the returned value.
pub fn moreau_stationarity<P: MinimaxProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    lambda: Option<f64>,
    tol: f64,
) -> Result<f64> {
    moreau_stationarity_with(problem, x, lambda, tol).map(|(v, _)| v)
}

/// Like [`moreau_stationarity`] but also returns the proximal point `ẑ`.
pub fn moreau_stationarity_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    lambda: Option<f64>,
    tol: f64,
) -> Result<(f64, Vector)> {
    if x.len() != problem.dim_x() {
        return Err(Error::InvalidArgument("x has wrong dimension".into()));
    }
    let lambda = lambda.unwrap_or(0.5 / problem.smoothness());
    if !(lambda > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("lambda and tol must be positive".into()));
    }
    let z = match problem.y_constraint() {
        YConstraint::Unconstrained => prox_primal(problem, x, lambda, tol)?,
        YConstraint::Simplex => prox_dual(problem, x, lambda, tol)?,
    };
    Ok(((x - &z).norm() / lambda, z))
}

/// Backtracking gradient descent on `Φ(z) + ‖z − x‖²/(2λ)` for smooth `Φ`.
fn prox_primal<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, lambda: f64, tol: f64) -> Result<Vector> {
    let inner_tol = (tol * 1e-3).min(1e-9);
    let mut z = x.clone();
    let mut eval = phi_eval(problem, &z, inner_tol, InnerMethod::Auto, None)?;
    let mut objective = eval.value;
    let mut step = 0.5 * lambda;
    let mut residual = f64::INFINITY;
    for _ in 0..SOLVER_CAP {
        let grad = &eval.grad + (&z - x) / lambda;
        residual = grad.norm();
        // strong convexity of the prox objective is at least 1/(2λ)
        if 2.0 * residual <= tol {
            return Ok(z);
        }
        let mut accepted = false;
        while step > 1e-30 {
            let trial = &z - &grad * step;
            let trial_eval = phi_eval(problem, &trial, inner_tol, InnerMethod::Auto, Some(&eval.y_star))?;
            let trial_objective = trial_eval.value + (&trial - x).norm_squared() / (2.0 * lambda);
            // the prox objective is convex, so a trial point where -grad is
            // still a descent direction has not overshot; this is the only
            // usable test once value differences fall below rounding
            let trial_grad = &trial_eval.grad + (&trial - x) / lambda;
            let still_descending = trial_grad.dot(&grad) >= 0.0;
            if still_descending || trial_objective <= objective - 0.5 * step * residual * residual {
                z = trial;
                eval = trial_eval;
                objective = trial_objective;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NotConverged {
        solver: "Moreau proximal descent",
        iterations: SOLVER_CAP,
        residual,
    })
}

/// Dual projected-gradient ascent for simplex-constrained `y`:
/// `max_{y ∈ Δ} min_z F(z, y) + ‖z − x‖²/(2λ)`. The inner problem is strongly
/// convex for `λ < 1/L`; the duality gap certifies the proximal point.
fn prox_dual<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, lambda: f64, tol: f64) -> Result<Vector> {
    let smooth = problem.smoothness();
    let inner_step = lambda / (1.0 + lambda * smooth);
    // P is at least 1/(2λ)-strongly convex, so ‖z − ẑ‖/λ ≤ √(4·gap/λ)
    let gap_tol = 0.25 * tol * tol * lambda;
    let inner_min = |y: &Vector, z0: &Vector| -> Result<(Vector, f64)> {
        let mut z = z0.clone();
        for _ in 0..SOLVER_CAP {
            let (gx, _) = full_grads(problem, &z, y);
            let g = gx + (&z - x) / lambda;
            if g.norm() <= 1e-13 * (1.0 + (&z - x).norm() / lambda) {
                let value = full_value(problem, &z, y) + (&z - x).norm_squared() / (2.0 * lambda);
                return Ok((z, value));
            }
            z.axpy(-inner_step, &g, 1.0);
        }
        Err(Error::NotConverged {
            solver: "Moreau inner minimization",
            iterations: SOLVER_CAP,
            residual: f64::NAN,
        })
    };
    let primal = |z: &Vector, warm: &Vector| -> Result<f64> {
        let phi = match problem.phi_value(z) {
            Some(v) => v,
            None => full_value(problem, z, &solve_inner_max(problem, z, warm, 1e-12)?.0),
        };
        Ok(phi + (z - x).norm_squared() / (2.0 * lambda))
    };

    let mut y = problem.initial_point().1;
    let (mut z, mut dual) = inner_min(&y, x)?;
    let mut step = 1.0;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..SOLVER_CAP {
        iterations += 1;
        let upper = primal(&z, &y)?;
        gap = upper - dual;
        // below a few ulps of the objective the gap is pure rounding
        if gap <= gap_tol.max(16.0 * f64::EPSILON * (1.0 + upper.abs())) {
            return Ok(z);
        }
        let (_, gy) = full_grads(problem, &z, &y);
        // simplex projection ignores a common shift; dropping it keeps y + step·g well scaled
        let centered = gy.add_scalar(-gy.mean());
        let mut moved = false;
        while step > 1e-30 {
            let trial = project_y(problem, &(&y + &centered * step));
            let delta = &trial - &y;
            if delta.norm() == 0.0 {
                break;
            }
            let (trial_z, trial_dual) = inner_min(&trial, &z)?;
            // the dual is concave along the segment, so a nonnegative slope at
            // the trial point means it still ascends; near the optimum the
            // value differences sink below rounding and only the slope is usable
            let (_, trial_gy) = full_grads(problem, &trial_z, &trial);
            let still_ascending = trial_gy.dot(&delta) >= 0.0;
            let sufficient = trial_dual >= dual + gy.dot(&delta) - delta.norm_squared() / (2.0 * step)
                && trial_dual - dual > 1e-12 * (1.0 + dual.abs());
            if still_ascending || sufficient {
                y = trial;
                z = trial_z;
                dual = trial_dual;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Err(Error::NotConverged {
        solver: "Moreau dual ascent",
        iterations,
        residual: gap,
    })
}

/// Every stationarity measure available for `problem` at `(x, y)`.
pub fn stationarity_report<P: MinimaxProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    y: &Vector,
    tol: f64,
    with_moreau: bool,
) -> Result<StationarityReport> {
    let grad = match grad_phi(problem, x, tol) {
        Ok(v) => Some(v),
        Err(Error::Unavailable(_)) => None,
        Err(e) => return Err(e),
    };
    let moreau = if with_moreau || grad.is_none() {
        Some(moreau_stationarity(problem, x, None, tol)?)
    } else {
        None
    };
    let gap = primal_dual_gap(problem, x, y, tol)?;
    let method = match (grad, moreau) {
        (Some((_, m)), _) => m,
        _ => StationarityMethod::ProximalSolver,
    };
    Ok(StationarityReport {
        grad_phi_norm: grad.map(|g| g.0),
        moreau_grad_norm: moreau,
        primal_dual_gap: Some(gap),
        method,
    })
}
