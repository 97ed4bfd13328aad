use serde::{Deserialize, Serialize};

use super::hyper::{Algorithm, HyperParams};
use crate::error::{Error, Result};
use crate::metrics::{grad_phi, moreau_stationarity, primal_dual_gap};
use crate::problems::{full_value, MinimaxProblem, Vector};

/// One measurement row, taken at the averaged iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Local iterations completed by every client.
    pub iter: u64,
    pub samples_total: u64,
    pub comm_rounds: u64,
    /// `‖∇Φ(x̄)‖`.
    pub stat_ncsc: Option<f64>,
    /// `‖∇Φ_λ(x̄)‖` with `λ = 1/(2L)`.
    pub stat_ncc: Option<f64>,
    /// `Φ(x̄) − F(x̄, ȳ)`.
    pub gap: Option<f64>,
    pub objective: f64,
    pub task_metric: Option<f64>,
    /// Client dispersion about the mean just before the server step.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub hyperparams: HyperParams,
    pub records: Vec<RunRecord>,
    pub final_x: Vector,
    pub final_y: Vector,
    /// Index `t` of the uniformly drawn output iterate.
    pub output_round: usize,
    pub output_x: Vector,
    pub output_y: Vector,
    /// Averaged iterate after every iteration when
    /// [`RunOptions::keep_iterates`] is set.
    pub iterates: Vec<(Vector, Vector)>,
}

impl Trajectory {
    pub fn grad_phi_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.stat_ncsc).collect()
    }

    pub fn min_grad_phi(&self) -> Option<f64> {
        self.grad_phi_series().into_iter().reduce(f64::min)
    }

    /// Mean of `‖∇Φ(x̄_t)‖²` over the recorded rows.
    pub fn mean_sq_grad_phi(&self) -> Option<f64> {
        let s = self.grad_phi_series();
        (!s.is_empty()).then(|| s.iter().map(|g| g * g).sum::<f64>() / s.len() as f64)
    }

    pub fn moreau_series(&self) -> Vec<(u64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.stat_ncc.map(|m| (r.comm_rounds, m)))
            .collect()
    }

    /// Communication rounds of the first row satisfying `pred`.
    pub fn first_round_where(&self, pred: impl Fn(&RunRecord) -> bool) -> Option<u64> {
        self.records.iter().find(|r| pred(r)).map(|r| r.comm_rounds)
    }

    pub fn last(&self) -> &RunRecord {
        self.records.last().expect("trajectories hold at least one record")
    }
}

/// Measurement and execution settings shared by every driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Record every k-th server round (the first and last are always kept).
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Evaluate the Moreau stationarity at recorded rows.
    #[serde(default)]
    pub moreau: bool,
    /// Tolerance of the metric solvers.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Accuracy of the reported Moreau stationarity.
    #[serde(default = "default_moreau_tolerance")]
    pub moreau_tolerance: f64,
    /// Run client steps on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
    #[serde(skip)]
    pub keep_iterates: bool,
}

fn default_record_every() -> usize {
    1
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_moreau_tolerance() -> f64 {
    1e-4
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            moreau: false,
            tolerance: 1e-8,
            moreau_tolerance: 1e-4,
            parallel: false,
            keep_iterates: false,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.record_every == 0 {
            return Err(Error::config("record_every", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        if !(self.moreau_tolerance > 0.0) {
            return Err(Error::config("moreau_tolerance", "must be positive"));
        }
        Ok(())
    }
}

pub(crate) struct Recorder<'a, P: ?Sized> {
    problem: &'a P,
    opts: &'a RunOptions,
    total_rounds: u64,
    pub(crate) records: Vec<RunRecord>,
}

impl<'a, P: MinimaxProblem + ?Sized> Recorder<'a, P> {
    pub(crate) fn new(problem: &'a P, opts: &'a RunOptions, total_rounds: u64) -> Self {
        Self {
            problem,
            opts,
            total_rounds,
            records: Vec::new(),
        }
    }

    pub(crate) fn due(&self, round: u64) -> bool {
        round == 0 || round == self.total_rounds || round.is_multiple_of(self.opts.record_every as u64)
    }

    pub(crate) fn record(
        &mut self,
        iter: u64,
        samples_total: u64,
        comm_rounds: u64,
        x: &Vector,
        y: &Vector,
        drift: f64,
    ) {
        let p = self.problem;
        let tol = self.opts.tolerance;
        let stat_ncsc = grad_phi(p, x, tol).ok().map(|(g, _)| g);
        let stat_ncc = if self.opts.moreau {
            moreau_stationarity(p, x, None, self.opts.moreau_tolerance).ok()
        } else {
            None
        };
        self.records.push(RunRecord {
            iter,
            samples_total,
            comm_rounds,
            stat_ncsc,
            stat_ncc,
            gap: primal_dual_gap(p, x, y, tol).ok(),
            objective: full_value(p, x, y),
            task_metric: p.task_metric(x, y),
            drift,
        });
    }
}
