use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::csv::{write_summary, SummaryRow};
use crate::algorithms::{run, Trajectory};
use crate::error::Result;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// The configuration with every schedule expanded.
    pub resolved: ExperimentConfig,
    /// One trajectory per (algorithm, seed), algorithms in config order and
    /// seeds in config order within each algorithm.
    pub trajectories: Vec<Trajectory>,
    /// Summary CSV bytes.
    pub csv: Vec<u8>,
}

impl ExperimentOutput {
    pub fn for_algorithm(&self, algorithm: crate::algorithms::Algorithm) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter().filter(move |t| t.algorithm == algorithm)
    }
}

/// Runs every (algorithm, seed) pair of `config`. Pairs execute concurrently;
/// the output order and bytes do not depend on scheduling. When `out_dir` is
/// given, writes `summary.csv` and `config.resolved.toml` there.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutput> {
    config.validate()?;
    let problem = config.problem.build()?;
    let resolved = config.resolve(problem.as_ref())?;
    let jobs: Vec<_> = resolved
        .algorithms
        .iter()
        .flat_map(|&a| resolved.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let hypers = resolved
        .algorithms
        .iter()
        .map(|&a| resolved.hyper_for(a).map(|h| (a, h)))
        .collect::<Result<Vec<_>>>()?;
    let trajectories = jobs
        .par_iter()
        .map(|&(algo, seed)| {
            let hp = &hypers.iter().find(|(a, _)| *a == algo).expect("resolved above").1;
            run(algo, problem.as_ref(), hp, seed, &resolved.options)
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<SummaryRow> = trajectories.iter().flat_map(SummaryRow::from_trajectory).collect();
    let mut csv = Vec::new();
    write_summary(&mut csv, &rows)?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::File::create(dir.join(SUMMARY_CSV))?.write_all(&csv)?;
        fs::write(dir.join(RESOLVED_CONFIG), resolved.to_toml())?;
    }
    Ok(ExperimentOutput {
        resolved,
        trajectories,
        csv,
    })
}
