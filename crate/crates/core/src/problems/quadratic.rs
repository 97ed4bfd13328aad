//! `f_i(x, y) = ½ xᵀHx + (ℓ + s_i)ᵀx + xᵀBy − (μ/2)‖y‖²` with additive Gaussian
//! gradient noise. `H` may be indefinite, so each `f_i` is nonconvex in `x`
//! while staying `μ`-strongly concave in `y`; `y*(x) = Bᵀx/μ` in closed form.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_client, Matrix, Minibatch, MinimaxProblem, Vector};
use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream, StreamFactory};

#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    g_hessian: Matrix,
    g_linear: Vector,
    coupling: Matrix,
    mu: f64,
    noise_sigma: f64,
    per_client_shift: Vec<Vector>,
    offset: f64,
    lipschitz: f64,
}

impl QuadraticSaddle {
    pub fn new(
        g_hessian: Matrix,
        g_linear: Vector,
        coupling: Matrix,
        mu: f64,
        noise_sigma: f64,
        per_client_shift: Vec<Vector>,
    ) -> Result<Self> {
        let d1 = g_hessian.nrows();
        if g_hessian.ncols() != d1 || d1 == 0 {
            return Err(Error::InvalidArgument("g_hessian must be square and non-empty".into()));
        }
        if (&g_hessian - g_hessian.transpose()).abs().max() > 1e-12 * (1.0 + g_hessian.abs().max()) {
            return Err(Error::InvalidArgument("g_hessian must be symmetric".into()));
        }
        if g_linear.len() != d1 || coupling.nrows() != d1 || coupling.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "g_linear / coupling dimensions do not match g_hessian".into(),
            ));
        }
        if !(mu > 0.0) || !(noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("need mu > 0 and noise_sigma >= 0".into()));
        }
        if per_client_shift.is_empty() || per_client_shift.iter().any(|s| s.len() != d1) {
            return Err(Error::InvalidArgument(
                "need one d1-dimensional shift per client".into(),
            ));
        }
        let lipschitz = joint_lipschitz(&g_hessian, &coupling, mu);
        Ok(Self {
            g_hessian,
            g_linear,
            coupling,
            mu,
            noise_sigma,
            per_client_shift,
            offset: 0.0,
            lipschitz,
        })
    }

    /// Adds a constant to every `f_i`. Changes no gradient.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_noise(mut self, noise_sigma: f64) -> Self {
        self.noise_sigma = noise_sigma;
        self
    }

    /// Random instance with condition number `kappa = L_f / μ` (see
    /// [`QuadraticSpec`]).
    pub fn generate(spec: &QuadraticSpec) -> Result<Self> {
        spec.validate()?;
        let (d1, d2, mu) = (spec.dim_x, spec.dim_y, spec.mu);
        let mut rng = StreamFactory::new(spec.seed).stream(0, Purpose::Data);
        let rot = random_orthogonal(d1, &mut rng);
        let (lo, hi) = spec.hessian_spectrum;
        let spectrum = Vector::from_fn(d1, |i, _| {
            if d1 == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (d1 - 1) as f64
            }
        });
        let h0 = &rot * Matrix::from_diagonal(&spectrum) * rot.transpose();
        let h0 = (&h0 + h0.transpose()) * 0.5;
        let b0 = if d2 <= d1 {
            random_orthogonal(d1, &mut rng).columns(0, d2).into_owned()
        } else {
            random_orthogonal(d2, &mut rng).rows(0, d1).into_owned()
        };
        let scaled = |t: f64| (&h0 * t, &b0 * (t * mu).sqrt());
        let target = spec.kappa * mu;
        let lip_at = |t: f64| {
            let (h, b) = scaled(t);
            joint_lipschitz(&h, &b, mu)
        };
        let mut hi_t = 1.0;
        while lip_at(hi_t) < target {
            hi_t *= 2.0;
            if hi_t > 1e12 {
                return Err(Error::InvalidArgument("could not reach the requested kappa".into()));
            }
        }
        let mut lo_t = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo_t + hi_t);
            if lip_at(mid) < target {
                lo_t = mid;
            } else {
                hi_t = mid;
            }
        }
        let (h, b) = scaled(hi_t);
        let linear = random_direction(d1, &mut rng) * spec.linear_scale;
        let shifts = centered_shifts(spec.clients, d1, spec.heterogeneity, &mut rng);
        Self::new(h, linear, b, mu, spec.noise_sigma, shifts)
    }

    pub fn g_hessian(&self) -> &Matrix {
        &self.g_hessian
    }

    pub fn g_linear(&self) -> &Vector {
        &self.g_linear
    }

    pub fn coupling(&self) -> &Matrix {
        &self.coupling
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn per_client_shift(&self) -> &[Vector] {
        &self.per_client_shift
    }

    pub fn kappa(&self) -> f64 {
        self.lipschitz / self.mu
    }

    /// Mean client linear term `ℓ + (1/N) Σ s_i`.
    pub fn mean_linear(&self) -> Vector {
        let n = self.per_client_shift.len() as f64;
        let mut sum = self.g_linear.clone();
        for s in &self.per_client_shift {
            sum += s / n;
        }
        sum
    }

    /// Hessian of `Φ(x) = max_y F(x, y)`, namely `H + BBᵀ/μ`.
    pub fn phi_hessian(&self) -> Matrix {
        &self.g_hessian + &self.coupling * self.coupling.transpose() / self.mu
    }

    /// Unique stationary point of `Φ` when `H + BBᵀ/μ` is invertible.
    pub fn phi_stationary_point(&self) -> Option<Vector> {
        self.phi_hessian().lu().solve(&(-self.mean_linear()))
    }
}

/// Generator parameters for [`QuadraticSaddle::generate`].
///
/// `H = t·H₀` with `H₀` having eigenvalues evenly spread over
/// `hessian_spectrum`, `B = √(tμ)·B₀` with unit singular values, and `t` chosen
/// so the joint Hessian has spectral norm `kappa·μ`. Client shifts are centered
/// with mean squared norm `heterogeneity²` (so `ζ² = heterogeneity²`).
///
/// `Φ` is strongly convex only when `dim_y ≥ dim_x`; otherwise the directions
/// outside the range of `B` keep the negative curvature of `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub dim_x: usize,
    pub dim_y: usize,
    pub clients: usize,
    pub kappa: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub heterogeneity: f64,
    #[serde(default = "one")]
    pub linear_scale: f64,
    #[serde(default = "default_spectrum")]
    pub hessian_spectrum: (f64, f64),
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_spectrum() -> (f64, f64) {
    (-0.3, 0.1)
}

impl QuadraticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim_x == 0 || self.dim_y == 0 || self.clients == 0 {
            return Err(Error::InvalidArgument(
                "dim_x, dim_y and clients must be positive".into(),
            ));
        }
        if !(self.kappa > 1.0) || !(self.mu > 0.0) {
            return Err(Error::InvalidArgument("need kappa > 1 and mu > 0".into()));
        }
        if !(self.noise_sigma >= 0.0) || !(self.heterogeneity >= 0.0) || !self.linear_scale.is_finite() {
            return Err(Error::InvalidArgument(
                "noise_sigma and heterogeneity must be >= 0, linear_scale finite".into(),
            ));
        }
        let (lo, hi) = self.hessian_spectrum;
        if !(lo < 0.0 && lo <= hi && lo > -1.0) {
            return Err(Error::InvalidArgument(
                "hessian_spectrum (lo, hi) needs -1 < lo < 0 and lo <= hi".into(),
            ));
        }
        Ok(())
    }
}

fn joint_lipschitz(h: &Matrix, b: &Matrix, mu: f64) -> f64 {
    let (d1, d2) = (h.nrows(), b.ncols());
    let mut joint = Matrix::zeros(d1 + d2, d1 + d2);
    joint.view_mut((0, 0), (d1, d1)).copy_from(h);
    joint.view_mut((0, d1), (d1, d2)).copy_from(b);
    joint.view_mut((d1, 0), (d2, d1)).copy_from(&b.transpose());
    joint.view_mut((d1, d1), (d2, d2)).fill_diagonal(-mu);
    joint
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()))
}

fn random_orthogonal(n: usize, rng: &mut Stream) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

fn random_direction(n: usize, rng: &mut Stream) -> Vector {
    let v = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
    let norm = v.norm();
    if norm > 0.0 {
        v / norm
    } else {
        v
    }
}

fn centered_shifts(clients: usize, dim: usize, scale: f64, rng: &mut Stream) -> Vec<Vector> {
    let mut shifts: Vec<Vector> = (0..clients)
        .map(|_| Vector::from_fn(dim, |_, _| rng.sample(StandardNormal)))
        .collect();
    if clients == 1 || scale == 0.0 {
        return vec![Vector::zeros(dim); clients];
    }
    let mean = shifts.iter().fold(Vector::zeros(dim), |acc, s| acc + s) / clients as f64;
    for s in shifts.iter_mut() {
        *s -= &mean;
    }
    let msq = shifts.iter().map(|s| s.norm_squared()).sum::<f64>() / clients as f64;
    let factor = scale / msq.sqrt();
    shifts.iter_mut().for_each(|s| *s *= factor);
    shifts
}

impl MinimaxProblem for QuadraticSaddle {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim_x(&self) -> usize {
        self.g_hessian.nrows()
    }

    fn dim_y(&self) -> usize {
        self.coupling.ncols()
    }

    fn num_clients(&self) -> usize {
        self.per_client_shift.len()
    }

    fn draw_batch(&self, client: usize, size: usize, rng: &mut Stream) -> Result<Minibatch> {
        check_client(self, client)?;
        if self.noise_sigma == 0.0 {
            return Ok(Minibatch::with_noise(
                size,
                Vector::zeros(self.dim_x()),
                Vector::zeros(self.dim_y()),
            ));
        }
        // the mean of `size` i.i.d. N(0, σ²) vectors is N(0, σ²/size)
        let scale = self.noise_sigma / (size as f64).sqrt();
        let nx = Vector::from_fn(self.dim_x(), |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let ny = Vector::from_fn(self.dim_y(), |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        Ok(Minibatch::with_noise(size, nx, ny))
    }

    fn full_batch(&self, _client: usize) -> Minibatch {
        Minibatch::with_noise(1, Vector::zeros(self.dim_x()), Vector::zeros(self.dim_y()))
    }

    fn batch_value(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> f64 {
        let shift = &self.per_client_shift[client];
        let mut v =
            0.5 * x.dot(&(&self.g_hessian * x)) + self.g_linear.dot(x) + shift.dot(x) + x.dot(&(&self.coupling * y))
                - 0.5 * self.mu * y.norm_squared()
                + self.offset;
        if let Some((nx, ny)) = &batch.noise {
            v += nx.dot(x) + ny.dot(y);
        }
        v
    }

    fn batch_grads(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> (Vector, Vector) {
        let mut gx = &self.g_hessian * x + &self.coupling * y;
        gx += &self.g_linear;
        gx += &self.per_client_shift[client];
        let mut gy = self.coupling.tr_mul(x);
        gy.axpy(-self.mu, y, 1.0);
        if let Some((nx, ny)) = &batch.noise {
            gx += nx;
            gy += ny;
        }
        (gx, gy)
    }

    fn inner_maximizer(&self, x: &Vector) -> Option<Vector> {
        Some(self.coupling.tr_mul(x) / self.mu)
    }

    fn smoothness(&self) -> f64 {
        self.lipschitz
    }

    fn strong_concavity(&self) -> Option<f64> {
        Some(self.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{exact_full_grads, sample_partial_grads};

    fn spec() -> QuadraticSpec {
        QuadraticSpec {
            dim_x: 6,
            dim_y: 6,
            clients: 3,
            kappa: 10.0,
            mu: 1.0,
            noise_sigma: 0.0,
            heterogeneity: 0.5,
            linear_scale: 1.0,
            hessian_spectrum: (-0.3, 0.1),
            seed: 1,
        }
    }

    #[test]
    fn generated_instance_has_requested_kappa_and_indefinite_g() {
        let q = QuadraticSaddle::generate(&spec()).unwrap();
        assert!((q.kappa() - 10.0).abs() < 1e-8);
        let eig = q.g_hessian().clone().symmetric_eigen().eigenvalues;
        assert!(eig.min() < 0.0);
        // Φ itself is strongly convex for this family when d2 >= d1
        assert!(q.phi_hessian().symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn shifts_are_centered_with_requested_dispersion() {
        let q = QuadraticSaddle::generate(&spec()).unwrap();
        let mean = q.per_client_shift().iter().fold(Vector::zeros(6), |a, s| a + s);
        assert!(mean.norm() < 1e-12);
        let msq = q.per_client_shift().iter().map(|s| s.norm_squared()).sum::<f64>() / 3.0;
        assert!((msq - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_gradients_are_deterministic() {
        let q = QuadraticSaddle::generate(&spec()).unwrap();
        let x = Vector::from_fn(6, |i, _| i as f64 * 0.1);
        let y = Vector::from_fn(6, |i, _| 1.0 - i as f64 * 0.2);
        let mut rng = StreamFactory::new(0).stream(0, Purpose::Sampling);
        let (gx, gy) = sample_partial_grads(&q, 1, &x, &y, 7, &mut rng).unwrap();
        let expected_x = q.g_hessian() * &x + q.g_linear() + &q.per_client_shift()[1] + q.coupling() * &y;
        let expected_y = q.coupling().transpose() * &x - &y * q.mu();
        assert!((gx - expected_x).norm() < 1e-12);
        assert!((gy - expected_y).norm() < 1e-12);
    }

    #[test]
    fn identity_coupling_origin_is_stationary() {
        let q = QuadraticSaddle::new(
            Matrix::zeros(2, 2),
            Vector::zeros(2),
            Matrix::identity(2, 2),
            1.0,
            0.0,
            vec![Vector::zeros(2)],
        )
        .unwrap();
        let (gx, gy) = exact_full_grads(&q, &Vector::zeros(2), &Vector::zeros(2)).unwrap();
        assert_eq!(gx, Vector::zeros(2));
        assert_eq!(gy, Vector::zeros(2));
        let ystar = q.inner_maximizer(&Vector::from_column_slice(&[1.0, 2.0])).unwrap();
        assert_eq!(ystar, Vector::from_column_slice(&[1.0, 2.0]));
    }

    #[test]
    fn exact_y_gradient_closed_form() {
        let q = QuadraticSaddle::generate(&spec()).unwrap();
        let x = Vector::from_element(6, 0.3);
        let y = Vector::from_element(6, -0.2);
        let (_, gy) = exact_full_grads(&q, &x, &y).unwrap();
        let closed = q.coupling().transpose() * &x - &y * q.mu();
        assert!((gy - closed).norm() < 1e-12);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let q = QuadraticSaddle::generate(&spec()).unwrap();
        let mut rng = StreamFactory::new(0).stream(0, Purpose::Sampling);
        let err = sample_partial_grads(&q, 0, &Vector::zeros(5), &Vector::zeros(6), 1, &mut rng);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let err = sample_partial_grads(&q, 9, &Vector::zeros(6), &Vector::zeros(6), 1, &mut rng);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
