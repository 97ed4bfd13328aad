//! Stationarity measures, assumption-constant probes and task metrics.

mod assumptions;
mod rank;
mod stationarity;

pub use assumptions::{client_dispersion, estimate_assumption_constants, estimate_heterogeneity, AssumptionEstimates};
pub use rank::auroc;
pub use stationarity::{
    grad_phi, grad_phi_with, moreau_stationarity, moreau_stationarity_with, phi_eval, primal_dual_gap, solve_inner_max,
    stationarity_report, InnerMethod, PhiEval, StationarityMethod, StationarityReport,
};
