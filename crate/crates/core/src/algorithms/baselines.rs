//! Local SGDA, Local SGDA+, Momentum Local SGDA and centralized SGDA.

use super::fedsgda_plus::run_plus;
use super::trajectory::Recorder;
use super::{ascend, client_mean, descend, init_clients, output_index};
use super::{Algorithm, HyperParams, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::federation::{
    aggregate, broadcast, drift, ordered_mean, run_round_parallel, AggregationMode, ClientState, Estimator, ServerState,
};
use crate::problems::{project_y, MinimaxProblem, Vector};
use crate::rng::{Purpose, StreamFactory};

pub fn local_sgda<P: MinimaxProblem + ?Sized>(problem: &P, hp: &HyperParams, seed: u64) -> Result<Trajectory> {
    local_sgda_with(problem, hp, seed, &RunOptions::default())
}

/// `Q` simultaneous SGDA steps per client with steps `ĉη`, `cη`, then plain
/// averaging.
pub fn local_sgda_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    run_local(problem, hp, seed, opts, None)
}

pub fn momentum_local_sgda<P: MinimaxProblem + ?Sized>(problem: &P, hp: &HyperParams, seed: u64) -> Result<Trajectory> {
    momentum_local_sgda_with(problem, hp, seed, &RunOptions::default())
}

/// Local SGDA with heavy-ball directions `d ← m·d + g`; directions are
/// averaged together with the iterates.
pub fn momentum_local_sgda_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    run_local(problem, hp, seed, opts, Some(hp.momentum))
}

pub fn local_sgda_plus<P: MinimaxProblem + ?Sized>(problem: &P, hp: &HyperParams, seed: u64) -> Result<Trajectory> {
    local_sgda_plus_with(problem, hp, seed, &RunOptions::default())
}

/// FedSGDA+ with unit global steps.
pub fn local_sgda_plus_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let unit = HyperParams {
        eta_x: 1.0,
        eta_y: 1.0,
        ..hp.clone()
    };
    run_plus(problem, &unit, seed, opts, Algorithm::LocalSgdaPlus)
}

fn run_local<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
    momentum: Option<f64>,
) -> Result<Trajectory> {
    hp.validate()?;
    opts.validate()?;
    let n = problem.num_clients() as u64;
    let factory = StreamFactory::new(seed);
    let mut states = init_clients(problem, &factory);
    if momentum.is_some() {
        for s in &mut states {
            s.estimator = Estimator::Momentum {
                dx: Vector::zeros(problem.dim_x()),
                dy: Vector::zeros(problem.dim_y()),
            };
        }
    }
    let (x0, y0) = client_mean(&states);
    let mut server = ServerState::new(x0.clone(), y0.clone());
    let total_rounds = (hp.t / hp.q) as u64;
    let out_t = output_index(&factory, hp.t);
    let (mut out_x, mut out_y) = (x0.clone(), y0.clone());
    let mut recorder = Recorder::new(problem, opts, total_rounds);
    recorder.record(0, 0, 0, &x0, &y0, 0.0);
    let mut iterates = Vec::new();
    let (sx, sy) = (hp.x_step(), hp.y_step());

    let step = |s: &mut ClientState| -> Result<()> {
        let batch = problem.draw_batch(s.client_id, hp.b, &mut s.rng)?;
        let (gx, gy) = problem.batch_grads(s.client_id, &s.x, &s.y, &batch);
        match (&mut s.estimator, momentum) {
            (Estimator::Momentum { dx, dy }, Some(m)) => {
                if m == 0.0 {
                    *dx = gx;
                    *dy = gy;
                } else {
                    *dx = &*dx * m + gx;
                    *dy = &*dy * m + gy;
                }
                descend(&mut s.x, dx, sx);
                ascend(problem, &mut s.y, dy, sy);
            }
            _ => {
                descend(&mut s.x, &gx, sx);
                ascend(problem, &mut s.y, &gy, sy);
            }
        }
        Ok(())
    };

    for t in 1..=hp.t {
        run_round_parallel(&mut states, opts.parallel, t, step)?;
        server.samples += n * hp.b as u64;
        let aggregate_now = t % hp.q == 0;
        let mut round_drift = 0.0;
        if aggregate_now {
            round_drift = drift(&states);
            let agg = aggregate(&states, &AggregationMode::PlainAverage)?;
            server.x_bar = agg.x_bar;
            server.y_bar = project_y(problem, &agg.y_bar);
            let dirs = agg.directions;
            broadcast(&server, &mut states, dirs.as_ref().map(|(u, v)| (u, v)));
            server.round += 1;
            server.comm_rounds += 1;
        }
        if t == out_t || opts.keep_iterates {
            let (mx, my) = client_mean(&states);
            if t == out_t {
                out_x = mx.clone();
                out_y = my.clone();
            }
            if opts.keep_iterates {
                iterates.push((mx, my));
            }
        }
        if aggregate_now && recorder.due(server.comm_rounds) {
            recorder.record(
                t as u64,
                server.samples,
                server.comm_rounds,
                &server.x_bar,
                &server.y_bar,
                round_drift,
            );
        }
    }

    let (final_x, final_y) = client_mean(&states);
    Ok(Trajectory {
        algorithm: if momentum.is_some() {
            Algorithm::MomentumLocalSgda
        } else {
            Algorithm::LocalSgda
        },
        seed,
        hyperparams: hp.clone(),
        records: recorder.records,
        final_x,
        final_y: project_y(problem, &final_y),
        output_round: out_t,
        output_x: out_x,
        output_y: out_y,
        iterates,
    })
}

pub fn centralized_sgda<P: MinimaxProblem + ?Sized>(problem: &P, hp: &HyperParams, seed: u64) -> Result<Trajectory> {
    centralized_sgda_with(problem, hp, seed, &RunOptions::default())
}

/// Single-iterate SGDA with steps `ĉη`, `cη`. Each step averages one size-`b`
/// minibatch gradient per client, drawn from that client's stream. Every step
/// counts as one round.
pub fn centralized_sgda_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    hp.validate()?;
    opts.validate()?;
    let n = problem.num_clients();
    let factory = StreamFactory::new(seed);
    let mut streams: Vec<_> = (0..n).map(|i| factory.stream(i, Purpose::Sampling)).collect();
    let (mut x, mut y) = problem.initial_point();
    let out_t = output_index(&factory, hp.t);
    let (mut out_x, mut out_y) = (x.clone(), y.clone());
    let mut recorder = Recorder::new(problem, opts, hp.t as u64);
    recorder.record(0, 0, 0, &x, &y, 0.0);
    let mut iterates = Vec::new();
    let mut samples = 0u64;
    let (sx, sy) = (hp.x_step(), hp.y_step());

    for t in 1..=hp.t {
        let mut grads = Vec::with_capacity(n);
        for (client, rng) in streams.iter_mut().enumerate() {
            let batch = problem.draw_batch(client, hp.b, rng)?;
            grads.push(problem.batch_grads(client, &x, &y, &batch));
        }
        let gx = ordered_mean(grads.iter().map(|g| g.0.clone())).expect("at least one client");
        let gy = ordered_mean(grads.into_iter().map(|g| g.1)).expect("at least one client");
        descend(&mut x, &gx, sx);
        ascend(problem, &mut y, &gy, sy);
        samples += (n * hp.b) as u64;
        if !(x.iter().chain(y.iter()).all(|v| v.is_finite())) {
            return Err(Error::NumericalAbort { client: 0, iter: t });
        }
        if t == out_t {
            out_x = x.clone();
            out_y = y.clone();
        }
        if opts.keep_iterates {
            iterates.push((x.clone(), y.clone()));
        }
        if recorder.due(t as u64) {
            recorder.record(t as u64, samples, t as u64, &x, &y, 0.0);
        }
    }

    Ok(Trajectory {
        algorithm: Algorithm::CentralizedSgda,
        seed,
        hyperparams: hp.clone(),
        records: recorder.records,
        final_x: x,
        final_y: y,
        output_round: out_t,
        output_x: out_x,
        output_y: out_y,
        iterates,
    })
}
