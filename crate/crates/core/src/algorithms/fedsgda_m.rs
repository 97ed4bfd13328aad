use super::trajectory::Recorder;
use super::{ascend, client_mean, descend, init_clients, output_index};
use super::{Aggregation, Algorithm, HyperParams, RunOptions, Trajectory};
use crate::error::Result;
use crate::estimators::vr_init;
use crate::federation::ordered_mean;
use crate::federation::{
    aggregate, broadcast, drift, drift_about, run_round_parallel, AggregationMode, Estimator, ServerState,
};
use crate::problems::{project_y, MinimaxProblem};
use crate::rng::StreamFactory;

/// FedSGDA-M with default [`RunOptions`].
pub fn fedsgda_m<P: MinimaxProblem + ?Sized>(problem: &P, hp: &HyperParams, seed: u64) -> Result<Trajectory> {
    fedsgda_m_with(problem, hp, seed, &RunOptions::default())
}

/// FedSGDA-M: local STORM estimators, server averaging every `Q` iterations.
///
/// With [`Aggregation::Listing`] the server averages `u`, `v` and applies one
/// averaged step from the previous client iterates. With
/// [`Aggregation::PlainAverage`] clients step first and only the iterates are
/// averaged.
pub fn fedsgda_m_with<P: MinimaxProblem + ?Sized>(
    problem: &P,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    hp.validate()?;
    opts.validate()?;
    let n = problem.num_clients() as u64;
    let factory = StreamFactory::new(seed);
    let mut states = init_clients(problem, &factory);
    let (x0, y0) = client_mean(&states);

    run_round_parallel(&mut states, opts.parallel, 0, |s| {
        let est = vr_init(
            problem,
            s.client_id,
            &s.x,
            &s.y,
            hp.big_b,
            hp.alpha,
            hp.beta,
            &mut s.rng,
        )?;
        s.estimator = Estimator::Vr(est);
        Ok(())
    })?;
    let mut server = ServerState::new(x0.clone(), y0.clone());
    server.samples = n * hp.big_b as u64;

    let total_rounds = (hp.t / hp.q) as u64;
    let out_t = output_index(&factory, hp.t);
    let (mut out_x, mut out_y) = (x0.clone(), y0.clone());
    let mut recorder = Recorder::new(problem, opts, total_rounds);
    recorder.record(0, server.samples, 0, &x0, &y0, 0.0);
    let mut iterates = Vec::new();
    let (sx, sy) = (hp.x_step(), hp.y_step());

    let local_step = |s: &mut crate::federation::ClientState| -> Result<()> {
        let Estimator::Vr(est) = &s.estimator else {
            unreachable!("FedSGDA-M clients carry VR estimators")
        };
        descend(&mut s.x, &est.u, sx);
        ascend(problem, &mut s.y, &est.v, sy);
        Ok(())
    };

    for t in 1..=hp.t {
        let aggregate_now = t % hp.q == 0;
        let mut round_drift = 0.0;
        if aggregate_now {
            match hp.aggregation {
                Aggregation::Listing => {
                    let candidates: Vec<_> = states
                        .iter()
                        .map(|s| match &s.estimator {
                            Estimator::Vr(e) => (&s.x - &e.u * sx, &s.y + &e.v * sy),
                            _ => unreachable!("FedSGDA-M clients carry VR estimators"),
                        })
                        .collect();
                    let cx = ordered_mean(candidates.iter().map(|c| c.0.clone())).expect("nonempty");
                    let cy = ordered_mean(candidates.iter().map(|c| c.1.clone())).expect("nonempty");
                    round_drift = drift_about(candidates.iter().map(|(a, b)| (a, b)), &cx, &cy);

                    let agg = aggregate(&states, &AggregationMode::SteppedAverage { x_step: sx, y_step: sy })?;
                    server.x_bar = agg.x_bar;
                    server.y_bar = project_y(problem, &agg.y_bar);
                    let (u, v) = agg.directions.expect("VR estimators are averaged");
                    broadcast(&server, &mut states, Some((&u, &v)));
                }
                Aggregation::PlainAverage => {
                    run_round_parallel(&mut states, opts.parallel, t, local_step)?;
                    round_drift = drift(&states);
                    let agg = aggregate(&states, &AggregationMode::PlainAverage)?;
                    server.x_bar = agg.x_bar;
                    server.y_bar = project_y(problem, &agg.y_bar);
                    broadcast(&server, &mut states, None);
                }
            }
            server.round += 1;
            server.comm_rounds += 1;
        } else {
            run_round_parallel(&mut states, opts.parallel, t, local_step)?;
        }

        run_round_parallel(&mut states, opts.parallel, t, |s| {
            let id = s.client_id;
            let Estimator::Vr(est) = &mut s.estimator else {
                unreachable!("FedSGDA-M clients carry VR estimators")
            };
            est.update(problem, id, &s.x, &s.y, hp.b, &mut s.rng)
        })?;
        server.samples += n * hp.b as u64;

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
        algorithm: Algorithm::FedsgdaM,
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
