//! Gradient estimators: plain minibatch gradients and the recursive
//! momentum-based variance-reduced (STORM) estimator.

use crate::error::{Error, Result};
use crate::problems::{check_client, check_point, MinimaxProblem, Vector};
use crate::rng::Stream;

/// `u`, `v` track `∇_x f_i` and `∇_y f_i`; `prev_*` is the point the last
/// minibatch was evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct VrEstimatorState {
    pub u: Vector,
    pub v: Vector,
    pub prev_x: Vector,
    pub prev_y: Vector,
    pub alpha: f64,
    pub beta: f64,
}

fn check_coefficients(alpha: f64, beta: f64) -> Result<()> {
    let ok = |c: f64| c > 0.0 && c <= 1.0;
    if !ok(alpha) || !ok(beta) {
        return Err(Error::InvalidArgument(format!(
            "alpha and beta must lie in (0, 1], got {alpha} and {beta}"
        )));
    }
    Ok(())
}

/// Initializes `u`, `v` with size-`init_batch` minibatch gradients at `(x0, y0)`.
pub fn vr_init<P: MinimaxProblem + ?Sized>(
    problem: &P,
    client: usize,
    x0: &Vector,
    y0: &Vector,
    init_batch: usize,
    alpha: f64,
    beta: f64,
    rng: &mut Stream,
) -> Result<VrEstimatorState> {
    check_coefficients(alpha, beta)?;
    check_client(problem, client)?;
    check_point(problem, x0, y0)?;
    if init_batch == 0 {
        return Err(Error::InvalidArgument("initial batch size must be positive".into()));
    }
    let batch = problem.draw_batch(client, init_batch, rng)?;
    let (u, v) = problem.batch_grads(client, x0, y0, &batch);
    Ok(VrEstimatorState {
        u,
        v,
        prev_x: x0.clone(),
        prev_y: y0.clone(),
        alpha,
        beta,
    })
}

impl VrEstimatorState {
    /// `u ← g(x_t) + (1−α)(u − g(prev))` with both gradients on one minibatch,
    /// likewise `v` with `β`; then `prev ← (x_t, y_t)`.
    pub fn update<P: MinimaxProblem + ?Sized>(
        &mut self,
        problem: &P,
        client: usize,
        x: &Vector,
        y: &Vector,
        batch_size: usize,
        rng: &mut Stream,
    ) -> Result<()> {
        if self.u.len() != problem.dim_x() || self.v.len() != problem.dim_y() {
            return Err(Error::InvalidState("estimator does not match the problem".into()));
        }
        check_coefficients(self.alpha, self.beta)?;
        if batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        let batch = problem.draw_batch(client, batch_size, rng)?;
        let (gx, gy) = problem.batch_grads(client, x, y, &batch);
        let history = if self.alpha < 1.0 || self.beta < 1.0 {
            Some(problem.batch_grads(client, &self.prev_x, &self.prev_y, &batch))
        } else {
            None
        };
        match &history {
            Some((hx, _)) if self.alpha < 1.0 => self.u = gx + (&self.u - hx) * (1.0 - self.alpha),
            _ => self.u = gx,
        }
        match &history {
            Some((_, hy)) if self.beta < 1.0 => self.v = gy + (&self.v - hy) * (1.0 - self.beta),
            _ => self.v = gy,
        }
        self.prev_x.copy_from(x);
        self.prev_y.copy_from(y);
        Ok(())
    }
}

/// Free-function form of [`VrEstimatorState::update`].
pub fn vr_update<P: MinimaxProblem + ?Sized>(
    state: &mut VrEstimatorState,
    problem: &P,
    client: usize,
    x: &Vector,
    y: &Vector,
    batch_size: usize,
    rng: &mut Stream,
) -> Result<()> {
    check_client(problem, client)?;
    check_point(problem, x, y)?;
    state.update(problem, client, x, y, batch_size, rng)
}

/// `(‖u − ∇_x f_i(x, y)‖, ‖v − ∇_y f_i(x, y)‖)`.
pub fn estimator_error<P: MinimaxProblem + ?Sized>(
    state: &VrEstimatorState,
    problem: &P,
    client: usize,
    x: &Vector,
    y: &Vector,
) -> Result<(f64, f64)> {
    check_client(problem, client)?;
    check_point(problem, x, y)?;
    let (gx, gy) = problem.client_grads(client, x, y);
    Ok(((&state.u - gx).norm(), (&state.v - gy).norm()))
}
