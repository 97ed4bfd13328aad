//! Federated minimax objectives `F(x, y) = (1/N) Σ_i f_i(x, y)`.
//!
//! A problem exposes a stochastic first-order oracle per client: a minibatch is
//! drawn once from the client's distribution and can then be evaluated at any
//! number of points. Evaluating the same [`Minibatch`] at two points is what the
//! variance-reduced estimators rely on.

mod auroc;
mod data;
mod fair;
mod quadratic;
mod simplex;

pub use auroc::AurocLinear;
pub use data::{
    make_heterogeneous_shards, partition_dirichlet, read_shards_csv, write_shards_csv, DataShard, Dataset, DatasetSpec,
};
pub use fair::FairClassification;
pub use quadratic::{QuadraticSaddle, QuadraticSpec};
pub use simplex::project_simplex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Feasible set of the max-variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YConstraint {
    Unconstrained,
    /// `{ y : y_c >= 0, Σ y_c = 1 }`
    Simplex,
}

/// One drawn minibatch. Data problems carry sample indices (drawn uniformly
/// with replacement); the quadratic family carries the batch-mean additive
/// gradient noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub indices: Vec<usize>,
    pub noise: Option<(Vector, Vector)>,
    size: usize,
}

impl Minibatch {
    pub fn from_indices(indices: Vec<usize>) -> Self {
        let size = indices.len();
        Self {
            indices,
            noise: None,
            size,
        }
    }

    pub fn with_noise(size: usize, noise_x: Vector, noise_y: Vector) -> Self {
        Self {
            indices: Vec::new(),
            noise: Some((noise_x, noise_y)),
            size,
        }
    }

    /// Number of samples charged to the IFO counter.
    pub fn size(&self) -> usize {
        self.size
    }
}

/// Stochastic federated minimax objective.
///
/// Implementors supply minibatch draws and minibatch evaluation; exact client
/// quantities default to evaluating the noise-free full batch.
pub trait MinimaxProblem: Send + Sync {
    fn name(&self) -> &str;
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn num_clients(&self) -> usize;

    fn y_constraint(&self) -> YConstraint {
        YConstraint::Unconstrained
    }

    /// Local dataset of a client, for data-driven problems.
    fn shard(&self, _client: usize) -> Option<&DataShard> {
        None
    }

    /// Starting point shared by every client.
    fn initial_point(&self) -> (Vector, Vector) {
        let y = match self.y_constraint() {
            YConstraint::Unconstrained => Vector::zeros(self.dim_y()),
            YConstraint::Simplex => Vector::from_element(self.dim_y(), 1.0 / self.dim_y() as f64),
        };
        (Vector::zeros(self.dim_x()), y)
    }

    /// Draws `size` i.i.d. samples from the client distribution.
    fn draw_batch(&self, client: usize, size: usize, rng: &mut Stream) -> Result<Minibatch>;

    /// Noise-free batch covering the client's whole local objective.
    fn full_batch(&self, client: usize) -> Minibatch;

    /// Minibatch average of per-sample losses.
    fn batch_value(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> f64;

    /// Minibatch average of per-sample partial gradients `(∇_x, ∇_y)`.
    fn batch_grads(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> (Vector, Vector);

    fn client_value(&self, client: usize, x: &Vector, y: &Vector) -> f64 {
        self.batch_value(client, x, y, &self.full_batch(client))
    }

    fn client_grads(&self, client: usize, x: &Vector, y: &Vector) -> (Vector, Vector) {
        self.batch_grads(client, x, y, &self.full_batch(client))
    }

    /// Closed-form `y*(x) = argmax_y F(x, y)` when one exists.
    fn inner_maximizer(&self, _x: &Vector) -> Option<Vector> {
        None
    }

    /// Closed-form `Φ(x) = max_y F(x, y)` when one exists.
    fn phi_value(&self, x: &Vector) -> Option<f64> {
        let y = self.inner_maximizer(x)?;
        Some(full_value(self, x, &y))
    }

    /// Upper bound on the joint gradient Lipschitz constant `L_f`.
    fn smoothness(&self) -> f64;

    /// Strong-concavity (or PL) modulus in `y`, if known.
    fn strong_concavity(&self) -> Option<f64> {
        None
    }

    /// Task-level quality of an iterate (test AUROC, worst-class loss, ...).
    fn task_metric(&self, _x: &Vector, _y: &Vector) -> Option<f64> {
        None
    }
}

pub(crate) fn check_client<P: MinimaxProblem + ?Sized>(problem: &P, client: usize) -> Result<()> {
    if client >= problem.num_clients() {
        return Err(Error::InvalidArgument(format!(
            "client {client} out of range (N = {})",
            problem.num_clients()
        )));
    }
    Ok(())
}

pub(crate) fn check_point<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector) -> Result<()> {
    if x.len() != problem.dim_x() || y.len() != problem.dim_y() {
        return Err(Error::InvalidArgument(format!(
            "point has dims ({}, {}), problem expects ({}, {})",
            x.len(),
            y.len(),
            problem.dim_x(),
            problem.dim_y()
        )));
    }
    Ok(())
}

/// Uniform draw with replacement from `0..n`.
pub(crate) fn draw_indices(n: usize, size: usize, rng: &mut Stream) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidState("cannot sample from an empty shard".into()));
    }
    Ok((0..size).map(|_| rng.random_range(0..n)).collect())
}

/// Minibatch partial gradients of client `client` at `(x, y)`.
pub fn sample_partial_grads<P: MinimaxProblem + ?Sized>(
    problem: &P,
    client: usize,
    x: &Vector,
    y: &Vector,
    batch_size: usize,
    rng: &mut Stream,
) -> Result<(Vector, Vector)> {
    check_client(problem, client)?;
    check_point(problem, x, y)?;
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let batch = problem.draw_batch(client, batch_size, rng)?;
    Ok(problem.batch_grads(client, x, y, &batch))
}

/// `(∇_x F, ∇_y F)` averaged over clients in ascending client order.
pub fn exact_full_grads<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector) -> Result<(Vector, Vector)> {
    check_point(problem, x, y)?;
    Ok(full_grads(problem, x, y))
}

pub(crate) fn full_grads<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector) -> (Vector, Vector) {
    let n = problem.num_clients();
    let mut gx = Vector::zeros(problem.dim_x());
    let mut gy = Vector::zeros(problem.dim_y());
    for client in 0..n {
        let (a, b) = problem.client_grads(client, x, y);
        gx += a;
        gy += b;
    }
    (gx / n as f64, gy / n as f64)
}

/// `F(x, y)`.
pub fn full_value<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector, y: &Vector) -> f64 {
    let n = problem.num_clients();
    (0..n).map(|c| problem.client_value(c, x, y)).sum::<f64>() / n as f64
}

/// `y*(x)` when the problem has a closed form.
pub fn inner_maximizer<P: MinimaxProblem + ?Sized>(problem: &P, x: &Vector) -> Result<Vector> {
    if x.len() != problem.dim_x() {
        return Err(Error::InvalidArgument("x has wrong dimension".into()));
    }
    problem
        .inner_maximizer(x)
        .ok_or_else(|| Error::Unavailable(format!("{} has no closed-form inner maximizer", problem.name())))
}

/// Projection of `y` onto the problem's feasible set.
pub fn project_y<P: MinimaxProblem + ?Sized>(problem: &P, y: &Vector) -> Vector {
    match problem.y_constraint() {
        YConstraint::Unconstrained => y.clone(),
        YConstraint::Simplex => project_simplex(y),
    }
}
