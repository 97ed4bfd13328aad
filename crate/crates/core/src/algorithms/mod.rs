//! Optimizer drivers. Every driver is a pure function of
//! `(problem, hyperparameters, seed)`: client `i` draws its minibatches from
//! its own stream, so runs are bit-identical regardless of thread count.

mod baselines;
mod fedsgda_m;
mod fedsgda_plus;
mod hyper;
mod schedule;
mod trajectory;

pub use baselines::{
    centralized_sgda, centralized_sgda_with, local_sgda, local_sgda_plus, local_sgda_plus_with, local_sgda_with,
    momentum_local_sgda, momentum_local_sgda_with,
};
pub use fedsgda_m::{fedsgda_m, fedsgda_m_with};
pub use fedsgda_plus::{fedsgda_plus, fedsgda_plus_with};
pub use hyper::{Aggregation, Algorithm, HyperParams};
pub use schedule::{round_count, theorem_schedule_ncc, theorem_schedule_ncpl, NccSchedule, NcplSchedule};
pub use trajectory::{RunOptions, RunRecord, Trajectory};

use crate::error::Result;
use crate::federation::{ordered_mean, ClientState};
use crate::problems::{project_y, MinimaxProblem, Vector};
use crate::rng::{Purpose, StreamFactory};

/// Runs `algorithm` with the given options.
pub fn run<P: MinimaxProblem + ?Sized>(
    algorithm: Algorithm,
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    match algorithm {
        Algorithm::FedsgdaM => fedsgda_m_with(problem, hp, seed, opts),
        Algorithm::FedsgdaPlus => fedsgda_plus_with(problem, hp, seed, opts),
        Algorithm::LocalSgda => local_sgda_with(problem, hp, seed, opts),
        Algorithm::LocalSgdaPlus => local_sgda_plus_with(problem, hp, seed, opts),
        Algorithm::MomentumLocalSgda => momentum_local_sgda_with(problem, hp, seed, opts),
        Algorithm::CentralizedSgda => centralized_sgda_with(problem, hp, seed, opts),
    }
}

fn init_clients<P: MinimaxProblem + ?Sized>(problem: &P, factory: &StreamFactory) -> Vec<ClientState> {
    let (x0, y0) = problem.initial_point();
    (0..problem.num_clients())
        .map(|i| ClientState::new(i, x0.clone(), y0.clone(), factory.stream(i, Purpose::Sampling)))
        .collect()
}

/// Uniform output index in `1..=horizon`, drawn before the run starts.
fn output_index(factory: &StreamFactory, horizon: usize) -> usize {
    use rand::Rng;
    factory.stream(0, Purpose::Server).random_range(1..=horizon)
}

fn descend(x: &mut Vector, dir: &Vector, step: f64) {
    *x -= dir * step;
}

fn ascend<P: MinimaxProblem + ?Sized>(problem: &P, y: &mut Vector, dir: &Vector, step: f64) {
    *y = project_y(problem, &(&*y + dir * step));
}

fn client_mean(states: &[ClientState]) -> (Vector, Vector) {
    (
        ordered_mean(states.iter().map(|s| s.x.clone())).expect("at least one client"),
        ordered_mean(states.iter().map(|s| s.y.clone())).expect("at least one client"),
    )
}
