//! Tunes the FedSGDA+ server steps on the fair-ncc preset and compares the
//! winner with Local SGDA+ on the Moreau stationarity.

use fedminimax::algorithms::Algorithm;
use fedminimax::harness::{presets, run_experiment};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn main() -> fedminimax::Result<()> {
    let presets::Preset::Experiment(base) = presets::load("fair-ncc")? else {
        unreachable!("fair-ncc is a single experiment")
    };
    let grid = [0.5, 1.0, 1.5, 2.0];
    let mut best = (f64::INFINITY, 1.0, 1.0);
    for &eta_x in &grid {
        for &eta_y in &grid {
            let mut cfg = base.clone();
            cfg.algorithms = vec![Algorithm::FedsgdaPlus];
            cfg.options.moreau = false;
            cfg.options.record_every = usize::MAX;
            cfg.set("eta_x", eta_x)?;
            cfg.set("eta_y", eta_y)?;
            let out = run_experiment(&cfg, None)?;
            let worst_class = median(out.trajectories.iter().filter_map(|t| t.last().task_metric).collect());
            println!("eta_x {eta_x}, eta_y {eta_y}: median worst-class loss {worst_class:.4}");
            if worst_class < best.0 {
                best = (worst_class, eta_x, eta_y);
            }
        }
    }
    println!("best: eta_x {}, eta_y {}", best.1, best.2);

    let mut cfg = base;
    cfg.set("eta_x", best.1)?;
    cfg.set("eta_y", best.2)?;
    let out = run_experiment(&cfg, None)?;
    for algo in [Algorithm::FedsgdaPlus, Algorithm::LocalSgdaPlus] {
        let finals: Vec<f64> = out
            .for_algorithm(algo)
            .filter_map(|t| t.moreau_series().last().map(|p| p.1))
            .collect();
        println!("{algo}: median final Moreau stationarity {:.4}", median(finals));
    }
    Ok(())
}
