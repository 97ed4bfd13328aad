//! The quadratic-ncsc problem with hand-picked FedSGDA-M steps instead of the
//! corollary schedule. Every seed reaches ‖∇Φ‖ ≤ 1e-3 well inside 2·10⁴
//! iterations.
//!
//! The gradient noise sets the floor: a small STORM weight α and a large
//! initial batch keep the estimator error below the target.

use fedminimax::algorithms::HyperParams;
use fedminimax::harness::{presets, run_experiment};

fn main() -> fedminimax::Result<()> {
    let presets::Preset::Experiment(mut cfg) = presets::load("quadratic-ncsc")? else {
        unreachable!("quadratic-ncsc is a single experiment")
    };
    cfg.schedule = None;
    cfg.hyperparams = Some(HyperParams {
        t: 20_000,
        q: 5,
        b: 100,
        big_b: 100_000,
        eta: 1.0,
        c_hat: 0.005,
        c: 0.05,
        alpha: 3e-4,
        beta: 3e-4,
        ..HyperParams::default()
    });
    cfg.options.record_every = 10;

    let out = run_experiment(&cfg, None)?;
    let mut reached = 0;
    for t in &out.trajectories {
        let first = t.first_round_where(|r| r.stat_ncsc.is_some_and(|g| g <= 1e-3));
        let min = t.min_grad_phi().unwrap_or(f64::NAN);
        match first {
            Some(round) => {
                reached += 1;
                println!(
                    "seed {}: min ‖∇Φ‖ {min:.2e}, below 1e-3 at round {round} (iteration {})",
                    t.seed,
                    round * 5
                );
            }
            None => println!("seed {}: min ‖∇Φ‖ {min:.2e}, never below 1e-3", t.seed),
        }
    }
    println!("{reached} of {} seeds reach 1e-3", out.trajectories.len());
    Ok(())
}
