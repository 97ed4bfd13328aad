use super::trajectory::Recorder;
use super::{ascend, client_mean, descend, init_clients, output_index};
use super::{Algorithm, HyperParams, RunOptions, Trajectory};
use crate::error::Result;
use crate::federation::{aggregate, broadcast, drift, run_round_parallel, AggregationMode, ServerState};
use crate::problems::{project_y, MinimaxProblem};
use crate::rng::StreamFactory;

/// FedSGDA+ with default [`RunOptions`].
pub fn fedsgda_plus<P: MinimaxProblem + ?Sized>(problem: &P, hp: &HyperParams, seed: u64) -> Result<Trajectory> {
    fedsgda_plus_with(problem, hp, seed, &RunOptions::default())
}

/// FedSGDA+: `Q` local steps per round with the y-gradient taken at the
/// snapshot `x̃`, global steps `η_x`, `η_y` on the averaged client deltas, and
/// a snapshot refresh every `S` rounds. Local steps use `ĉ` and `c`.
pub fn fedsgda_plus_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    run_plus(problem, hp, seed, opts, Algorithm::FedsgdaPlus)
}

pub(crate) fn run_plus<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
    label: Algorithm,
) -> Result<Trajectory> {
    hp.validate()?;
    opts.validate()?;
    let n = problem.num_clients() as u64;
    let factory = StreamFactory::new(seed);
    let mut states = init_clients(problem, &factory);
    let (x0, y0) = client_mean(&states);
    let mut server = ServerState::new(x0.clone(), y0.clone());
    let mut snapshot = x0.clone();

    let out_t = output_index(&factory, hp.t);
    let (mut out_x, mut out_y) = (x0.clone(), y0.clone());
    let mut recorder = Recorder::new(problem, opts, hp.t as u64);
    recorder.record(0, 0, 0, &x0, &y0, 0.0);
    let mut iterates = Vec::new();

    for t in 0..hp.t {
        for q in 0..hp.q {
            let x_tilde = &snapshot;
            run_round_parallel(&mut states, opts.parallel, t * hp.q + q + 1, |s| {
                let batch = problem.draw_batch(s.client_id, hp.b, &mut s.rng)?;
                let (gx, _) = problem.batch_grads(s.client_id, &s.x, &s.y, &batch);
                let (_, gy) = problem.batch_grads(s.client_id, x_tilde, &s.y, &batch);
                descend(&mut s.x, &gx, hp.c_hat);
                ascend(problem, &mut s.y, &gy, hp.c);
                Ok(())
            })?;
            server.samples += n * hp.b as u64;
        }
        let round_drift = drift(&states);
        let agg = aggregate(
            &states,
            &AggregationMode::Delta {
                eta_x: hp.eta_x,
                eta_y: hp.eta_y,
                anchor_x: server.x_bar.clone(),
                anchor_y: server.y_bar.clone(),
            },
        )?;
        server.x_bar = agg.x_bar;
        server.y_bar = project_y(problem, &agg.y_bar);
        broadcast(&server, &mut states, None);
        server.round += 1;
        server.comm_rounds += 1;
        if (t + 1) % hp.s == 0 {
            snapshot = server.x_bar.clone();
        }

        if t + 1 == out_t {
            out_x = server.x_bar.clone();
            out_y = server.y_bar.clone();
        }
        if opts.keep_iterates {
            iterates.push((server.x_bar.clone(), server.y_bar.clone()));
        }
        if recorder.due(server.comm_rounds) {
            let iter = ((t + 1) * hp.q) as u64;
            recorder.record(
                iter,
                server.samples,
                server.comm_rounds,
                &server.x_bar,
                &server.y_bar,
                round_drift,
            );
        }
    }

    Ok(Trajectory {
        algorithm: label,
        seed,
        hyperparams: hp.clone(),
        records: recorder.records,
        final_x: server.x_bar,
        final_y: server.y_bar,
        output_round: out_t,
        output_x: out_x,
        output_y: out_y,
        iterates,
    })
}
