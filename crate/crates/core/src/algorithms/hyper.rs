use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The drivers this crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    FedsgdaM,
    FedsgdaPlus,
    LocalSgda,
    LocalSgdaPlus,
    MomentumLocalSgda,
    CentralizedSgda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::FedsgdaM,
        Algorithm::FedsgdaPlus,
        Algorithm::LocalSgda,
        Algorithm::LocalSgdaPlus,
        Algorithm::MomentumLocalSgda,
        Algorithm::CentralizedSgda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::FedsgdaM => "fedsgda_m",
            Algorithm::FedsgdaPlus => "fedsgda_plus",
            Algorithm::LocalSgda => "local_sgda",
            Algorithm::LocalSgdaPlus => "local_sgda_plus",
            Algorithm::MomentumLocalSgda => "momentum_local_sgda",
            Algorithm::CentralizedSgda => "centralized_sgda",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::config("algorithm", format!("unknown algorithm `{s}`")))
    }
}

/// Server step of FedSGDA-M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Average `u`, `v` and apply one averaged step from the previous iterates.
    #[default]
    Listing,
    /// Step locally, then average the iterates; estimators stay local.
    PlainAverage,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

/// Step sizes, momentum coefficients, loop counts and batch sizes.
///
/// Fields a driver does not read are still validated so that a resolved
/// config is always self-consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    /// Iterations (FedSGDA-M and the local baselines) or outer rounds (FedSGDA+).
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "Q", default = "one")]
    pub q: usize,
    #[serde(rename = "S", default = "one")]
    pub s: usize,
    #[serde(default = "one")]
    pub b: usize,
    #[serde(rename = "B", default = "one")]
    pub big_b: usize,
    #[serde(default = "one_f")]
    pub eta: f64,
    #[serde(default = "one_f")]
    pub c_hat: f64,
    #[serde(default = "one_f")]
    pub c: f64,
    #[serde(default = "one_f")]
    pub eta_x: f64,
    #[serde(default = "one_f")]
    pub eta_y: f64,
    #[serde(default = "one_f")]
    pub alpha: f64,
    #[serde(default = "one_f")]
    pub beta: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            t: 1,
            q: 1,
            s: 1,
            b: 1,
            big_b: 1,
            eta: 1.0,
            c_hat: 1.0,
            c: 1.0,
            eta_x: 1.0,
            eta_y: 1.0,
            alpha: 1.0,
            beta: 1.0,
            momentum: 0.0,
            aggregation: Aggregation::Listing,
        }
    }
}

impl HyperParams {
    /// Step size of the x-update used by FedSGDA-M and the SGDA baselines.
    pub fn x_step(&self) -> f64 {
        self.c_hat * self.eta
    }

    pub fn y_step(&self) -> f64 {
        self.c * self.eta
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("hyperparams.{name}");
        for (name, value) in [
            ("T", self.t),
            ("Q", self.q),
            ("S", self.s),
            ("b", self.b),
            ("B", self.big_b),
        ] {
            if value == 0 {
                return Err(Error::config(field(name), "must be at least 1"));
            }
        }
        for (name, value) in [
            ("eta", self.eta),
            ("c_hat", self.c_hat),
            ("c", self.c),
            ("eta_x", self.eta_x),
            ("eta_y", self.eta_y),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    field(name),
                    format!("step size must be positive and finite, got {value}"),
                ));
            }
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::config(field(name), format!("must lie in (0, 1], got {value}")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(
                field("momentum"),
                format!("must lie in [0, 1), got {}", self.momentum),
            ));
        }
        Ok(())
    }
}
