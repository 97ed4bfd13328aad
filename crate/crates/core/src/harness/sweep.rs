use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{run_experiment, ExperimentOutput};
use crate::algorithms::{Algorithm, Trajectory};
use crate::error::{Error, Result};

pub const GRID_CSV: &str = "grid.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// How axes combine into cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Cartesian product, last axis varying fastest.
    #[default]
    Grid,
    /// Axes advance together; all must have the same length.
    Zip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub mode: GridMode,
}

impl SweepSpec {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::config(origin, e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(Error::config(
                "axes",
                "the grid must have at least one axis with values",
            ));
        }
        if self.mode == GridMode::Zip && self.axes.iter().any(|a| a.values.len() != self.axes[0].values.len()) {
            return Err(Error::config("axes", "zipped axes must have equal lengths"));
        }
        Ok(())
    }

    /// Axis assignments of every cell in output order.
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        match self.mode {
            GridMode::Zip => (0..self.axes[0].values.len())
                .map(|i| self.axes.iter().map(|a| (a.name.clone(), a.values[i])).collect())
                .collect(),
            GridMode::Grid => {
                let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
                for axis in &self.axes {
                    points = points
                        .into_iter()
                        .flat_map(|p| {
                            axis.values.iter().map(move |&v| {
                                let mut q = p.clone();
                                q.push((axis.name.clone(), v));
                                q
                            })
                        })
                        .collect();
                }
                points
            }
        }
    }

    pub fn cell_config(&self, point: &[(String, f64)]) -> Result<ExperimentConfig> {
        let mut cfg = self.base.clone();
        for (name, value) in point {
            cfg.set(name, *value)
                .map_err(|e| Error::config(format!("axes.{name}"), e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-seed end-of-run metrics of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub final_grad_phi: Option<f64>,
    pub min_grad_phi: Option<f64>,
    pub mean_sq_grad_phi: Option<f64>,
    pub final_moreau: Option<f64>,
    pub final_task_metric: Option<f64>,
    pub final_objective: f64,
    /// Mean pre-aggregation drift over the recorded server rounds.
    pub mean_drift: f64,
}

impl SeedSummary {
    pub const METRICS: [&'static str; 7] = [
        "final_grad_phi",
        "min_grad_phi",
        "mean_sq_grad_phi",
        "final_moreau",
        "final_task_metric",
        "final_objective",
        "mean_drift",
    ];

    pub fn of(t: &Trajectory) -> Self {
        let last = t.last();
        let rounds: Vec<f64> = t
            .records
            .iter()
            .filter(|r| r.comm_rounds > 0)
            .map(|r| r.drift)
            .collect();
        Self {
            final_grad_phi: last.stat_ncsc,
            min_grad_phi: t.min_grad_phi(),
            mean_sq_grad_phi: t.mean_sq_grad_phi(),
            final_moreau: t.records.iter().rev().find_map(|r| r.stat_ncc),
            final_task_metric: last.task_metric,
            final_objective: last.objective,
            mean_drift: if rounds.is_empty() {
                0.0
            } else {
                rounds.iter().sum::<f64>() / rounds.len() as f64
            },
        }
    }

    pub fn values(&self) -> [Option<f64>; 7] {
        [
            self.final_grad_phi,
            self.min_grad_phi,
            self.mean_sq_grad_phi,
            self.final_moreau,
            self.final_task_metric,
            Some(self.final_objective),
            Some(self.mean_drift),
        ]
    }
}

/// Mean and sample standard deviation; `None` when any seed lacks the value.
pub fn mean_std(values: &[Option<f64>]) -> Option<(f64, f64)> {
    let v: Option<Vec<f64>> = values.iter().copied().collect();
    let v = v.filter(|v| !v.is_empty())?;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub point: Vec<(String, f64)>,
    pub output: ExperimentOutput,
}

impl SweepCell {
    pub fn summaries(&self, algorithm: Algorithm) -> Vec<SeedSummary> {
        self.output.for_algorithm(algorithm).map(SeedSummary::of).collect()
    }

    /// `(mean, std)` of `metric` (one of [`SeedSummary::METRICS`]) over seeds.
    pub fn metric(&self, algorithm: Algorithm, metric: &str) -> Option<(f64, f64)> {
        let idx = SeedSummary::METRICS.iter().position(|m| *m == metric)?;
        let vals: Vec<Option<f64>> = self.summaries(algorithm).iter().map(|s| s.values()[idx]).collect();
        mean_std(&vals)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub cells: Vec<SweepCell>,
    /// Grid CSV bytes: axes, algorithm, seed count, then `mean`/`std` per metric.
    pub csv: Vec<u8>,
}

/// Runs every cell of the sweep. With `out_dir`, each cell writes its own
/// `cell_NNN/` directory and the merged `grid.csv` is written last.
pub fn run_sweep(spec: &SweepSpec, out_dir: Option<&Path>) -> Result<SweepOutput> {
    spec.validate()?;
    let points = spec.points();
    let configs = points.iter().map(|p| spec.cell_config(p)).collect::<Result<Vec<_>>>()?;
    let outputs = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let dir = out_dir.map(|d| d.join(format!("cell_{i:03}")));
            run_experiment(cfg, dir.as_deref())
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<SweepCell> = points
        .into_iter()
        .zip(outputs)
        .map(|(point, output)| SweepCell { point, output })
        .collect();

    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    header.push("algo".into());
    header.push("seeds".into());
    for m in SeedSummary::METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    w.write_record(&header)?;
    for cell in &cells {
        for &algo in &cell.output.resolved.algorithms {
            let mut row: Vec<String> = cell.point.iter().map(|(_, v)| v.to_string()).collect();
            row.push(algo.to_string());
            let summaries = cell.summaries(algo);
            row.push(summaries.len().to_string());
            for idx in 0..SeedSummary::METRICS.len() {
                let vals: Vec<Option<f64>> = summaries.iter().map(|s| s.values()[idx]).collect();
                match mean_std(&vals) {
                    Some((m, s)) => {
                        row.push(m.to_string());
                        row.push(s.to_string());
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            w.write_record(&row)?;
        }
    }
    let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(GRID_CSV), &csv)?;
    }
    Ok(SweepOutput { cells, csv })
}
