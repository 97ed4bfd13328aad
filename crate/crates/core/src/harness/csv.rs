//! The summary CSV: one row per (algorithm, seed, recorded round).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, RunRecord, Trajectory};
use crate::error::Result;

pub const SUMMARY_HEADER: [&str; 11] = [
    "algo",
    "seed",
    "iter",
    "comm_rounds",
    "samples",
    "grad_phi",
    "moreau",
    "gap",
    "objective",
    "task_metric",
    "drift",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: Algorithm,
    pub seed: u64,
    pub iter: u64,
    pub comm_rounds: u64,
    pub samples: u64,
    pub grad_phi: Option<f64>,
    pub moreau: Option<f64>,
    pub gap: Option<f64>,
    pub objective: f64,
    pub task_metric: Option<f64>,
    pub drift: f64,
}

impl SummaryRow {
    pub fn new(algo: Algorithm, seed: u64, r: &RunRecord) -> Self {
        Self {
            algo,
            seed,
            iter: r.iter,
            comm_rounds: r.comm_rounds,
            samples: r.samples_total,
            grad_phi: r.stat_ncsc,
            moreau: r.stat_ncc,
            gap: r.gap,
            objective: r.objective,
            task_metric: r.task_metric,
            drift: r.drift,
        }
    }

    pub fn from_trajectory(t: &Trajectory) -> Vec<Self> {
        t.records.iter().map(|r| Self::new(t.algorithm, t.seed, r)).collect()
    }

    pub fn record(&self) -> RunRecord {
        RunRecord {
            iter: self.iter,
            samples_total: self.samples,
            comm_rounds: self.comm_rounds,
            stat_ncsc: self.grad_phi,
            stat_ncc: self.moreau,
            gap: self.gap,
            objective: self.objective,
            task_metric: self.task_metric,
            drift: self.drift,
        }
    }
}

pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(reader: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
