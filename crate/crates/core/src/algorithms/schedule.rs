//! Hyperparameters prescribed by the convergence corollaries.

use serde::Serialize;

use super::hyper::HyperParams;
use crate::error::{Error, Result};

/// Round half up with a floor of 1.
pub fn round_count(value: f64) -> usize {
    ((value + 0.5).floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NcplSchedule {
    pub hyper: HyperParams,
    pub q_raw: f64,
    pub big_b_raw: f64,
    /// `κ^{3−ν}·T0` before rounding.
    pub t_raw: f64,
    pub c1: f64,
    pub c2: f64,
}

/// FedSGDA-M parameters for NC-PL problems.
///
/// `η = 1/(20QL)` is evaluated at the rounded `Q`.
pub fn theorem_schedule_ncpl(kappa: f64, l: f64, n: usize, b: usize, nu: f64, t0: f64) -> Result<NcplSchedule> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::config("schedule.kappa", "must be at least 1"));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::config("schedule.L", "must be positive"));
    }
    if n == 0 {
        return Err(Error::config("schedule.N", "must be at least 1"));
    }
    if b == 0 {
        return Err(Error::config("schedule.b", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::config("schedule.nu", "must lie in [0, 1]"));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::config("schedule.T0", "must be positive"));
    }
    let nf = n as f64;
    let q_raw = t0.cbrt() / nf.powf(2.0 / 3.0);
    if q_raw < 1.0 {
        return Err(Error::config(
            "schedule.T0",
            format!(
                "Q = T0^(1/3)/N^(2/3) = {q_raw:.4} < 1; T0 must be at least N^2 = {}",
                n * n
            ),
        ));
    }
    let q = round_count(q_raw);
    let eta = 1.0 / (20.0 * q as f64 * l);
    let bf = b as f64;
    let c1 = 30.0 * l * l / (bf * nf * kappa.powf(1.0 - nu));
    let c2 = 30.0 * l * l / (bf * nf * kappa.powf(2.0 - 2.0 * nu));
    let alpha = c1 * eta * eta;
    let beta = c2 * eta * eta;
    if alpha > 1.0 || beta > 1.0 {
        return Err(Error::config(
            "schedule",
            format!("momentum coefficients alpha = {alpha:.4}, beta = {beta:.4} exceed 1"),
        ));
    }
    let big_b_raw = t0.cbrt() * bf * kappa.powf(1.0 - nu) / nf.powf(2.0 / 3.0);
    let t_raw = kappa.powf(3.0 - nu) * t0;
    let hyper = HyperParams {
        t: round_count(t_raw),
        q,
        b,
        big_b: round_count(big_b_raw),
        eta,
        c_hat: 1.0 / (54.0 * kappa.powf(3.0 - nu)),
        c: 1.0 / (6.0 * kappa.powf(1.0 - nu)),
        alpha,
        beta,
        ..HyperParams::default()
    };
    Ok(NcplSchedule {
        hyper,
        q_raw,
        big_b_raw,
        t_raw,
        c1,
        c2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NccSchedule {
    pub hyper: HyperParams,
    pub q_raw: f64,
    pub s_raw: f64,
}

/// FedSGDA+ parameters for NC-C problems: `c = ĉ = 1/(10LQT^{1/3})`,
/// `ĉη_x = N/(10LT)`, `cη_y = 1/(10LQ)`, `S = T^{1/3}`, with `Q` rounded.
pub fn theorem_schedule_ncc(l: f64, n: usize, t: usize) -> Result<NccSchedule> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::config("schedule.L", "must be positive"));
    }
    if n == 0 {
        return Err(Error::config("schedule.N", "must be at least 1"));
    }
    if t == 0 {
        return Err(Error::config("schedule.T", "must be at least 1"));
    }
    let tf = t as f64;
    let t13 = tf.cbrt();
    let q_raw = t13 / n as f64;
    if q_raw < 1.0 {
        return Err(Error::config(
            "schedule.T",
            format!("Q = T^(1/3)/N = {q_raw:.4} < 1; T must be at least N^3 = {}", n * n * n),
        ));
    }
    let q = round_count(q_raw);
    let step = 1.0 / (10.0 * l * q as f64 * t13);
    let hyper = HyperParams {
        t,
        q,
        s: round_count(t13),
        c_hat: step,
        c: step,
        eta_x: n as f64 / (10.0 * l * tf) / step,
        eta_y: 1.0 / (10.0 * l * q as f64) / step,
        ..HyperParams::default()
    };
    Ok(NccSchedule {
        hyper,
        q_raw,
        s_raw: t13,
    })
}
