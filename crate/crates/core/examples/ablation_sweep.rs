//! The Q × momentum ablation: mean client drift and final ‖∇Φ‖ per cell.

use fedminimax::algorithms::Algorithm;
use fedminimax::harness::{presets, run_sweep};

fn main() -> fedminimax::Result<()> {
    let presets::Preset::Sweep(spec) = presets::load("ablation-q-momentum")? else {
        unreachable!("ablation-q-momentum is a sweep")
    };
    let out_dir = std::env::args().nth(1).map(std::path::PathBuf::from);
    let out = run_sweep(&spec, out_dir.as_deref())?;
    println!("{:>4} {:>6} {:>12} {:>14}", "Q", "alpha", "mean drift", "final ‖∇Φ‖");
    for cell in &out.cells {
        let (drift, _) = cell
            .metric(Algorithm::FedsgdaM, "mean_drift")
            .unwrap_or((f64::NAN, 0.0));
        let (grad, _) = cell
            .metric(Algorithm::FedsgdaM, "final_grad_phi")
            .unwrap_or((f64::NAN, 0.0));
        println!(
            "{:>4} {:>6} {drift:>12.3e} {grad:>14.3e}",
            cell.point[0].1, cell.point[1].1
        );
    }
    Ok(())
}
