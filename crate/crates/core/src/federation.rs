//! Client/server simulation substrate shared by every driver.
//!
//! All reductions sum in ascending client order starting from client 0, so
//! results do not depend on how client steps are scheduled onto threads.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::VrEstimatorState;
use crate::problems::Vector;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    None,
    Vr(VrEstimatorState),
    /// Heavy-ball directions for the x and y blocks.
    Momentum {
        dx: Vector,
        dy: Vector,
    },
}

impl Estimator {
    fn directions(&self) -> Option<(&Vector, &Vector)> {
        match self {
            Estimator::None => None,
            Estimator::Vr(s) => Some((&s.u, &s.v)),
            Estimator::Momentum { dx, dy } => Some((dx, dy)),
        }
    }

    fn set_directions(&mut self, x_dir: &Vector, y_dir: &Vector) {
        match self {
            Estimator::None => {}
            Estimator::Vr(s) => {
                s.u.copy_from(x_dir);
                s.v.copy_from(y_dir);
            }
            Estimator::Momentum { dx, dy } => {
                dx.copy_from(x_dir);
                dy.copy_from(y_dir);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub client_id: usize,
    pub x: Vector,
    pub y: Vector,
    pub estimator: Estimator,
    pub rng: Stream,
}

impl ClientState {
    pub fn new(client_id: usize, x: Vector, y: Vector, rng: Stream) -> Self {
        Self {
            client_id,
            x,
            y,
            estimator: Estimator::None,
            rng,
        }
    }

    pub fn is_finite(&self) -> bool {
        let finite = |v: &Vector| v.iter().all(|a| a.is_finite());
        finite(&self.x) && finite(&self.y) && self.estimator.directions().is_none_or(|(a, b)| finite(a) && finite(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub x_bar: Vector,
    pub y_bar: Vector,
    pub round: usize,
    pub comm_rounds: u64,
    pub samples: u64,
}

impl ServerState {
    pub fn new(x_bar: Vector, y_bar: Vector) -> Self {
        Self {
            x_bar,
            y_bar,
            round: 0,
            comm_rounds: 0,
            samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationMode {
    PlainAverage,
    /// `x̄ = mean(x^j − x_step·u^j)`, `ȳ = mean(y^j + y_step·v^j)`.
    SteppedAverage {
        x_step: f64,
        y_step: f64,
    },
    /// `x̄ = anchor_x + η_x·mean(x^j − anchor_x)`, likewise for `y`.
    Delta {
        eta_x: f64,
        eta_y: f64,
        anchor_x: Vector,
        anchor_y: Vector,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub x_bar: Vector,
    pub y_bar: Vector,
    /// Averaged estimator directions when every client carries one.
    pub directions: Option<(Vector, Vector)>,
}

/// Arithmetic mean in iteration order, starting the sum from the first item.
pub fn ordered_mean<I>(items: I) -> Option<Vector>
where
    I: IntoIterator<Item = Vector>,
{
    let mut iter = items.into_iter();
    let mut acc = iter.next()?;
    let mut count = 1usize;
    for item in iter {
        acc += item;
        count += 1;
    }
    Some(acc / count as f64)
}

pub fn aggregate(states: &[ClientState], mode: &AggregationMode) -> Result<Aggregate> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot aggregate zero clients".into()))?;
    let (dx, dy) = (first.x.len(), first.y.len());
    if states.iter().any(|s| s.x.len() != dx || s.y.len() != dy) {
        return Err(Error::InvalidArgument(
            "client states have mismatched dimensions".into(),
        ));
    }
    let dirs: Option<Vec<(&Vector, &Vector)>> = states.iter().map(|s| s.estimator.directions()).collect();
    let directions = dirs.as_ref().map(|d| {
        (
            ordered_mean(d.iter().map(|(u, _)| (*u).clone())).unwrap_or_else(|| Vector::zeros(0)),
            ordered_mean(d.iter().map(|(_, v)| (*v).clone())).unwrap_or_else(|| Vector::zeros(0)),
        )
    });
    let (x_bar, y_bar) = match mode {
        AggregationMode::PlainAverage => (
            ordered_mean(states.iter().map(|s| s.x.clone())),
            ordered_mean(states.iter().map(|s| s.y.clone())),
        ),
        AggregationMode::SteppedAverage { x_step, y_step } => {
            let d = dirs
                .as_ref()
                .ok_or_else(|| Error::InvalidState("stepped averaging needs an estimator on every client".into()))?;
            (
                ordered_mean(states.iter().zip(d).map(|(s, (u, _))| &s.x - *u * *x_step)),
                ordered_mean(states.iter().zip(d).map(|(s, (_, v))| &s.y + *v * *y_step)),
            )
        }
        AggregationMode::Delta {
            eta_x,
            eta_y,
            anchor_x,
            anchor_y,
        } => {
            if anchor_x.len() != dx || anchor_y.len() != dy {
                return Err(Error::InvalidArgument("anchor has mismatched dimensions".into()));
            }
            let mx = ordered_mean(states.iter().map(|s| &s.x - anchor_x));
            let my = ordered_mean(states.iter().map(|s| &s.y - anchor_y));
            (mx.map(|m| anchor_x + m * *eta_x), my.map(|m| anchor_y + m * *eta_y))
        }
    };
    Ok(Aggregate {
        x_bar: x_bar.expect("nonempty"),
        y_bar: y_bar.expect("nonempty"),
        directions,
    })
}

/// Sets every client to the server iterate and, when given, the averaged
/// estimator directions.
pub fn broadcast(server: &ServerState, states: &mut [ClientState], directions: Option<(&Vector, &Vector)>) {
    for s in states.iter_mut() {
        s.x.copy_from(&server.x_bar);
        s.y.copy_from(&server.y_bar);
        if let Some((u, v)) = directions {
            s.estimator.set_directions(u, v);
        }
    }
}

/// `(1/N) Σ_i ‖x^i − x̄‖² + ‖y^i − ȳ‖²` about the clients' own mean.
pub fn drift(states: &[ClientState]) -> f64 {
    let Some(x_bar) = ordered_mean(states.iter().map(|s| s.x.clone())) else {
        return 0.0;
    };
    let y_bar = ordered_mean(states.iter().map(|s| s.y.clone())).expect("nonempty");
    drift_about(states.iter().map(|s| (&s.x, &s.y)), &x_bar, &y_bar)
}

/// Mean squared distance of `points` to `(x_bar, y_bar)`.
pub fn drift_about<'a, I>(points: I, x_bar: &Vector, y_bar: &Vector) -> f64
where
    I: IntoIterator<Item = (&'a Vector, &'a Vector)>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, y) in points {
        total += (x - x_bar).norm_squared() + (y - y_bar).norm_squared();
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Runs `step` once per client, on the rayon pool when `parallel` is set.
///
/// The outcome equals sequential execution in client order. The first failing
/// client (lowest id) determines the error; a panic becomes
/// [`Error::ClientPanic`] and a non-finite state [`Error::NumericalAbort`].
pub fn run_round_parallel<F>(states: &mut [ClientState], parallel: bool, iter: usize, step: F) -> Result<()>
where
    F: Fn(&mut ClientState) -> Result<()> + Sync,
{
    let guarded = |s: &mut ClientState| -> Result<()> {
        let id = s.client_id;
        match catch_unwind(AssertUnwindSafe(|| step(s))) {
            Ok(Ok(())) if s.is_finite() => Ok(()),
            Ok(Ok(())) => Err(Error::NumericalAbort { client: id, iter }),
            Ok(Err(e)) => Err(e),
            Err(payload) => {
                let message = payload
                    .downcast_ref::<&str>()
                    .map(|m| m.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "unknown panic".into());
                Err(Error::ClientPanic { client: id, message })
            }
        }
    };
    let outcomes: Vec<Result<()>> = if parallel && states.len() > 1 {
        states.par_iter_mut().map(guarded).collect()
    } else {
        states.iter_mut().map(guarded).collect()
    };
    outcomes.into_iter().collect()
}
