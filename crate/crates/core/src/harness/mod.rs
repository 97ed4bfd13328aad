//! Experiment runner: TOML configs, presets, seed sweeps, CSV output and
//! plots.

mod config;
mod csv;
mod plot;
pub mod presets;
mod run;
mod sweep;

pub use self::csv::{read_summary, write_summary, SummaryRow, SUMMARY_HEADER};
pub use config::{set_hyper, ExperimentConfig, ProblemSpec, ScheduleSpec};
pub use plot::{
    emit_plots, emit_plots_from_rows, render_svg, series_csv, series_from_rows, PlotFiles, PlotKind, Series,
};
pub use run::{run_experiment, ExperimentOutput, RESOLVED_CONFIG, SUMMARY_CSV};
pub use sweep::{mean_std, run_sweep, Axis, GridMode, SeedSummary, SweepCell, SweepOutput, SweepSpec, GRID_CSV};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "FEDMINIMAX_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`] when it is set.
pub fn init_thread_pool() -> crate::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .parse()
            .map_err(|_| crate::Error::config(THREADS_ENV, format!("expected a thread count, got `{raw}`")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}
