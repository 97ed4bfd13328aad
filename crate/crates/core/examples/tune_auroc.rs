//! Per-method step tuning on the auroc-ncsc preset.
//!
//! Each method gets its own grid over the x step, the y step and its
//! momentum knob. The score is the median number of rounds to test AUROC
//! 0.95 over the preset seeds. The winners are the `[overrides]` of the preset.

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
    let presets::Preset::Experiment(base) = presets::load("auroc-ncsc")? else {
        unreachable!("auroc-ncsc is a single experiment")
    };
    let knobs = [
        (Algorithm::FedsgdaM, Some("alpha_beta")),
        (Algorithm::MomentumLocalSgda, Some("momentum")),
        (Algorithm::LocalSgda, None),
    ];
    for (algo, knob) in knobs {
        let knob_values: &[f64] = if knob.is_some() { &[0.1, 0.5, 0.9] } else { &[0.0] };
        let mut best: Option<(f64, String)> = None;
        for c_hat in [0.05, 0.1, 0.2, 0.4] {
            for c in [0.01, 0.1, 1.0] {
                for &k in knob_values {
                    let mut cfg = base.clone();
                    cfg.algorithms = vec![algo];
                    cfg.overrides.clear();
                    cfg.set("c_hat", c_hat)?;
                    cfg.set("c", c)?;
                    if let Some(name) = knob {
                        cfg.set(name, k)?;
                    }
                    let label = match knob {
                        Some(name) => format!("c_hat {c_hat}, c {c}, {name} {k}"),
                        None => format!("c_hat {c_hat}, c {c}"),
                    };
                    let rounds: Vec<f64> = match run_experiment(&cfg, None) {
                        Ok(out) => out
                            .trajectories
                            .iter()
                            .map(|t| {
                                t.first_round_where(|r| r.task_metric.is_some_and(|m| m >= 0.95))
                                    .map_or(f64::INFINITY, |r| r as f64)
                            })
                            .collect(),
                        Err(_) => vec![f64::INFINITY],
                    };
                    let score = median(rounds);
                    if best.as_ref().is_none_or(|(b, _)| score < *b) {
                        best = Some((score, label));
                    }
                }
            }
        }
        let (score, label) = best.expect("grid is nonempty");
        println!("{algo}: median {score} rounds with {label}");
    }
    Ok(())
}
