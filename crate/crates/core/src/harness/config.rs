//! Declarative experiment and sweep configuration (TOML).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::algorithms::{theorem_schedule_ncc, theorem_schedule_ncpl, Algorithm, HyperParams, RunOptions};
use crate::error::{Error, Result};
use crate::problems::{
    read_shards_csv, AurocLinear, DatasetSpec, FairClassification, MinimaxProblem, QuadraticSaddle, QuadraticSpec,
};

/// Problem family and its generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic(QuadraticSpec),
    Fair {
        dataset: DatasetSpec,
        total_samples: usize,
        clients: usize,
        heterogeneity: f64,
        #[serde(default)]
        seed: u64,
        /// Load shards from this CSV instead of generating them.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shards_csv: Option<PathBuf>,
    },
    Auroc {
        dataset: DatasetSpec,
        total_samples: usize,
        test_samples: usize,
        clients: usize,
        heterogeneity: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn clients(&self) -> usize {
        match self {
            ProblemSpec::Quadratic(q) => q.clients,
            ProblemSpec::Fair { clients, .. } | ProblemSpec::Auroc { clients, .. } => *clients,
        }
    }

    pub fn build(&self) -> Result<Box<dyn MinimaxProblem>> {
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) | Error::InvalidState(m) => Error::config("problem", m),
            other => other,
        };
        Ok(match self {
            ProblemSpec::Quadratic(spec) => Box::new(QuadraticSaddle::generate(spec).map_err(wrap)?),
            ProblemSpec::Fair {
                dataset,
                total_samples,
                clients,
                heterogeneity,
                seed,
                shards_csv,
            } => match shards_csv {
                Some(path) => {
                    let shards = read_shards_csv(BufReader::new(File::open(path)?))?;
                    let classes = match dataset {
                        DatasetSpec::GaussianClasses { num_classes, .. } => *num_classes,
                        DatasetSpec::SeparableBinary { .. } => 2,
                    };
                    Box::new(FairClassification::new(shards, classes).map_err(wrap)?)
                }
                None => Box::new(
                    FairClassification::generate(dataset, *total_samples, *clients, *heterogeneity, *seed)
                        .map_err(wrap)?,
                ),
            },
            ProblemSpec::Auroc {
                dataset,
                total_samples,
                test_samples,
                clients,
                heterogeneity,
                seed,
            } => Box::new(
                AurocLinear::generate(dataset, *total_samples, *test_samples, *clients, *heterogeneity, *seed)
                    .map_err(wrap)?,
            ),
        })
    }

    /// Sets a numeric problem parameter by name (`clients`, `heterogeneity`,
    /// `noise_sigma`, `kappa`, `problem_seed`).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let path = format!("problem.{name}");
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(&path, format!("expected a positive integer, got {v}")))
            }
        };
        match (self, name) {
            (ProblemSpec::Quadratic(q), "clients") => q.clients = as_count(value)?,
            (ProblemSpec::Quadratic(q), "heterogeneity") => q.heterogeneity = value,
            (ProblemSpec::Quadratic(q), "noise_sigma") => q.noise_sigma = value,
            (ProblemSpec::Quadratic(q), "kappa") => q.kappa = value,
            (ProblemSpec::Quadratic(q), "problem_seed") => q.seed = value as u64,
            (ProblemSpec::Fair { clients, .. } | ProblemSpec::Auroc { clients, .. }, "clients") => {
                *clients = as_count(value)?
            }
            (ProblemSpec::Fair { heterogeneity, .. } | ProblemSpec::Auroc { heterogeneity, .. }, "heterogeneity") => {
                *heterogeneity = value
            }
            (ProblemSpec::Fair { seed, .. } | ProblemSpec::Auroc { seed, .. }, "problem_seed") => *seed = value as u64,
            _ => return Err(Error::config(path, "unknown or unsupported problem parameter")),
        }
        Ok(())
    }
}

/// Theorem schedule inputs; omitted `L`, `N`, `kappa` are read from the
/// problem (`κ = L/μ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Ncpl {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
        #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        b: usize,
        nu: f64,
        #[serde(rename = "T0")]
        t0: f64,
    },
    Ncc {
        #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
        #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(rename = "T")]
        t: usize,
    },
}

impl ScheduleSpec {
    pub fn resolve(&self, problem: &dyn MinimaxProblem) -> Result<HyperParams> {
        let l_of = |l: &Option<f64>| l.unwrap_or_else(|| problem.smoothness());
        let n_of = |n: &Option<usize>| n.unwrap_or_else(|| problem.num_clients());
        match self {
            ScheduleSpec::Ncpl { kappa, l, n, b, nu, t0 } => {
                let l = l_of(l);
                let kappa = match kappa {
                    Some(k) => *k,
                    None => {
                        let mu = problem.strong_concavity().ok_or_else(|| {
                            Error::config("schedule.kappa", "problem has no known modulus; set kappa explicitly")
                        })?;
                        l / mu
                    }
                };
                Ok(theorem_schedule_ncpl(kappa, l, n_of(n), *b, *nu, *t0)?.hyper)
            }
            ScheduleSpec::Ncc { l, n, t } => Ok(theorem_schedule_ncc(l_of(l), n_of(n), *t)?.hyper),
        }
    }

    fn set(&mut self, name: &str, value: f64) -> bool {
        match (self, name) {
            (ScheduleSpec::Ncpl { t0, .. }, "T0") => *t0 = value,
            (ScheduleSpec::Ncpl { nu, .. }, "nu") => *nu = value,
            (ScheduleSpec::Ncpl { b, .. }, "schedule_b") => *b = value as usize,
            (ScheduleSpec::Ncc { t, .. }, "schedule_T") => *t = value as usize,
            _ => return false,
        }
        true
    }
}

/// Sets one hyperparameter by name. `alpha_beta` sets both momentum
/// coefficients.
pub fn set_hyper(hp: &mut HyperParams, name: &str, value: f64) -> Result<()> {
    let path = format!("hyperparams.{name}");
    let count = || -> Result<usize> {
        if value >= 1.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(Error::config(
                &path,
                format!("expected a positive integer, got {value}"),
            ))
        }
    };
    match name {
        "T" => hp.t = count()?,
        "Q" => hp.q = count()?,
        "S" => hp.s = count()?,
        "b" => hp.b = count()?,
        "B" => hp.big_b = count()?,
        "eta" => hp.eta = value,
        "c_hat" => hp.c_hat = value,
        "c" => hp.c = value,
        "eta_x" => hp.eta_x = value,
        "eta_y" => hp.eta_y = value,
        "alpha" => hp.alpha = value,
        "beta" => hp.beta = value,
        "alpha_beta" => {
            hp.alpha = value;
            hp.beta = value;
        }
        "momentum" => hp.momentum = value,
        _ => return Err(Error::config(path, "unknown hyperparameter")),
    }
    Ok(())
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Algorithm>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Algorithm),
        Many(Vec<Algorithm>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(a) => vec![a],
        OneOrMany::Many(v) => v,
    })
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// One experiment: a problem, one or more algorithms, and a set of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub problem: ProblemSpec,
    /// `algorithm = "fedsgda_m"` or `algorithms = [...]`.
    #[serde(alias = "algorithm", deserialize_with = "one_or_many")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<HyperParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    /// Per-algorithm hyperparameter overrides, applied after the schedule.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub options: RunOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(origin, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm is required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        match (&self.hyperparams, &self.schedule) {
            (None, None) => return Err(Error::config("hyperparams", "give either [hyperparams] or [schedule]")),
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "schedule",
                    "[hyperparams] and [schedule] are mutually exclusive",
                ))
            }
            (Some(hp), None) => hp.validate()?,
            (None, Some(_)) => {}
        }
        for (algo, table) in &self.overrides {
            algo.parse::<Algorithm>()
                .map_err(|_| Error::config(format!("overrides.{algo}"), "unknown algorithm"))?;
            let mut probe = HyperParams::default();
            for (k, v) in table {
                set_hyper(&mut probe, k, *v)
                    .map_err(|_| Error::config(format!("overrides.{algo}.{k}"), "unknown hyperparameter"))?;
            }
        }
        self.options.validate()
    }

    /// Expands the schedule into explicit hyperparameters. The result carries
    /// no schedule and no hidden defaults.
    pub fn resolve(&self, problem: &dyn MinimaxProblem) -> Result<ExperimentConfig> {
        let hp = match (&self.hyperparams, &self.schedule) {
            (Some(hp), _) => hp.clone(),
            (None, Some(s)) => s.resolve(problem)?,
            (None, None) => return Err(Error::config("hyperparams", "give either [hyperparams] or [schedule]")),
        };
        hp.validate()?;
        let mut out = self.clone();
        out.hyperparams = Some(hp);
        out.schedule = None;
        Ok(out)
    }

    /// Hyperparameters of `algorithm` after overrides (requires a resolved
    /// config).
    pub fn hyper_for(&self, algorithm: Algorithm) -> Result<HyperParams> {
        let mut hp = self
            .hyperparams
            .clone()
            .ok_or_else(|| Error::config("hyperparams", "config is not resolved"))?;
        if let Some(table) = self.overrides.get(algorithm.as_str()) {
            for (k, v) in table {
                set_hyper(&mut hp, k, *v)?;
            }
        }
        hp.validate()?;
        Ok(hp)
    }

    /// Applies one sweep-axis value: a hyperparameter, schedule input,
    /// problem parameter or run option.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if name == "record_every" {
            self.options.record_every = value as usize;
            return Ok(());
        }
        if let Some(s) = &mut self.schedule {
            if s.set(name, value) {
                return Ok(());
            }
        }
        if self.problem.set(name, value).is_ok() {
            return Ok(());
        }
        match &mut self.hyperparams {
            Some(hp) => set_hyper(hp, name, value),
            None => {
                // schedule-driven configs take hyperparameter axes as overrides
                for a in &self.algorithms {
                    self.overrides
                        .entry(a.as_str().to_string())
                        .or_default()
                        .insert(name.to_string(), value);
                }
                let mut probe = HyperParams::default();
                set_hyper(&mut probe, name, value)
            }
        }
    }
}
