//! Hyperparameters prescribed by the two convergence corollaries.

use fedminimax::algorithms::{theorem_schedule_ncc, theorem_schedule_ncpl};

fn main() -> fedminimax::Result<()> {
    // NC-PL: kappa, L, N, b, nu, T0
    for (n, nu) in [(1, 0.0), (8, 0.0), (8, 1.0)] {
        let s = theorem_schedule_ncpl(10.0, 10.0, n, 10, nu, 200.0)?;
        let h = &s.hyper;
        println!(
            "ncpl N={n} nu={nu}: T={} Q={} (raw {:.2}) B={} eta={:.3e} c_hat={:.3e} c={:.3e} alpha={:.3e}",
            h.t, h.q, s.q_raw, h.big_b, h.eta, h.c_hat, h.c, h.alpha
        );
    }
    // NC-C: L, N, T
    for n in [1, 2, 4] {
        let s = theorem_schedule_ncc(1.0, n, 8000)?;
        let h = &s.hyper;
        println!(
            "ncc  N={n}: Q={} S={} c=c_hat={:.3e} eta_x={:.3e} eta_y={:.3e}",
            h.q, h.s, h.c, h.eta_x, h.eta_y
        );
    }
    Ok(())
}
