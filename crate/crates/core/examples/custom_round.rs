//! A hand-written local-SGDA loop built from the federation primitives:
//! per-client streams, parallel local steps, aggregation and broadcast.

use fedminimax::federation::{
    aggregate, broadcast, drift, run_round_parallel, AggregationMode, ClientState, ServerState,
};
use fedminimax::problems::{sample_partial_grads, MinimaxProblem, QuadraticSaddle, QuadraticSpec};
use fedminimax::rng::{Purpose, StreamFactory};

fn main() -> fedminimax::Result<()> {
    let problem = QuadraticSaddle::generate(&QuadraticSpec {
        dim_x: 6,
        dim_y: 6,
        clients: 4,
        kappa: 5.0,
        mu: 1.0,
        noise_sigma: 0.1,
        heterogeneity: 2.0,
        linear_scale: 1.0,
        hessian_spectrum: (-0.3, 0.1),
        seed: 1,
    })?;
    let streams = StreamFactory::new(42);
    let (x0, y0) = problem.initial_point();
    let mut server = ServerState::new(x0.clone(), y0.clone());
    let mut clients: Vec<ClientState> = (0..problem.num_clients())
        .map(|i| ClientState::new(i, x0.clone(), y0.clone(), streams.stream(i, Purpose::Sampling)))
        .collect();
    let (local_steps, x_step, y_step) = (10, 0.02, 0.1);

    for round in 0..30 {
        run_round_parallel(&mut clients, true, round * local_steps, |c| {
            for _ in 0..local_steps {
                let (gx, gy) = sample_partial_grads(&problem, c.client_id, &c.x, &c.y, 5, &mut c.rng)?;
                c.x -= gx * x_step;
                c.y += gy * y_step;
            }
            Ok(())
        })?;
        let spread = drift(&clients);
        let agg = aggregate(&clients, &AggregationMode::PlainAverage)?;
        server.x_bar = agg.x_bar;
        server.y_bar = agg.y_bar;
        broadcast(&server, &mut clients, None);
        if round % 5 == 4 {
            let grad = fedminimax::metrics::grad_phi(&problem, &server.x_bar, 1e-10)?.0;
            println!("round {:>2}: drift {spread:.3e}, ‖∇Φ‖ {grad:.3e}", round + 1);
        }
    }
    Ok(())
}
