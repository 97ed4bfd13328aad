//! Square-loss AUROC surrogate as a min-max problem over a linear scorer.
//!
//! Primal variable `x = (m, a, b)` with `m ∈ R^k`, dual `y = (w)`. Per sample
//! `ξ = (f, label)` with score `h = mᵀf`:
//!
//! ```text
//! (1-p)(h-a)² 1[+] + p(h-b)² 1[-] + 2(1+w)(p h 1[-] - (1-p) h 1[+]) - p(1-p) w²
//! ```
//!
//! where `p` is the prior probability of the positive class.

use nalgebra::SymmetricEigen;

use super::{
    check_client, draw_indices, partition_dirichlet, DataShard, Dataset, DatasetSpec, Matrix, Minibatch,
    MinimaxProblem, Vector,
};
use crate::error::{Error, Result};
use crate::metrics::auroc;
use crate::rng::{Purpose, Stream, StreamFactory};

#[derive(Debug, Clone)]
pub struct AurocLinear {
    shards: Vec<DataShard>,
    test: Dataset,
    prior_p: f64,
    scorer_dim: usize,
    lipschitz: f64,
}

impl AurocLinear {
    /// `prior_p` defaults to the pooled positive fraction of the shards.
    pub fn new(shards: Vec<DataShard>, test: Dataset, prior_p: Option<f64>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::InvalidArgument("need at least one shard".into()));
        }
        let k = shards[0].feature_dim();
        let (mut pos, mut total) = (0usize, 0usize);
        for (i, s) in shards.iter().enumerate() {
            if s.is_empty() || s.client_id != i || s.feature_dim() != k {
                return Err(Error::InvalidArgument(format!(
                    "shard {i} is empty, misnumbered or has wrong width"
                )));
            }
            if s.labels.iter().any(|&l| l != 1 && l != -1) {
                return Err(Error::InvalidArgument(format!(
                    "shard {i} has labels outside {{-1, +1}}"
                )));
            }
            pos += s.labels.iter().filter(|&&l| l == 1).count();
            total += s.len();
        }
        if test.features.ncols() != k || test.labels.iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::InvalidArgument(
                "test set must match the shards' width and use ±1 labels".into(),
            ));
        }
        let p = prior_p.unwrap_or(pos as f64 / total as f64);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("prior p must lie in (0, 1), got {p}")));
        }
        let lipschitz = shards
            .iter()
            .flat_map(|s| (0..s.len()).map(move |r| sample_hessian_norm(s, r, p)))
            .fold(0.0, f64::max);
        Ok(Self {
            shards,
            test,
            prior_p: p,
            scorer_dim: k,
            lipschitz,
        })
    }

    /// Generates train shards (label skew `heterogeneity`) and a held-out test
    /// set of `test_samples` points from the same task.
    pub fn generate(
        spec: &DatasetSpec,
        total_samples: usize,
        test_samples: usize,
        clients: usize,
        heterogeneity: f64,
        seed: u64,
    ) -> Result<Self> {
        if !matches!(spec, DatasetSpec::SeparableBinary { .. }) {
            return Err(Error::InvalidArgument(
                "AUROC problem needs a binary (±1) dataset".into(),
            ));
        }
        if total_samples < clients {
            return Err(Error::InvalidArgument(format!(
                "total samples ({total_samples}) must be at least the number of clients ({clients})"
            )));
        }
        let streams = StreamFactory::new(seed);
        let mut sets = spec.generate_sets(&[total_samples, test_samples], &mut streams.stream(0, Purpose::Data))?;
        let test = sets.pop().expect("two sets");
        let train = sets.pop().expect("two sets");
        let shards = partition_dirichlet(&train, clients, heterogeneity, &mut streams.stream(1, Purpose::Data))?;
        Self::new(shards, test, None)
    }

    pub fn prior_p(&self) -> f64 {
        self.prior_p
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test
    }

    pub fn scorer_dim(&self) -> usize {
        self.scorer_dim
    }

    /// Test-set AUROC of the scorer `m` packed in `x`.
    pub fn test_auroc(&self, x: &Vector) -> f64 {
        let m = x.rows(0, self.scorer_dim);
        let scores: Vec<f64> = (0..self.test.len())
            .map(|r| self.test.features.row(r).dot(&m.transpose()))
            .collect();
        auroc(&scores, &self.test.labels).unwrap_or(f64::NAN)
    }

    fn score(&self, shard: &DataShard, row: usize, x: &Vector) -> f64 {
        let mut h = 0.0;
        for j in 0..self.scorer_dim {
            h += x[j] * shard.features[(row, j)];
        }
        h
    }
}

/// Spectral norm of the (constant) per-sample Hessian in `(m, a, b, w)`.
fn sample_hessian_norm(shard: &DataShard, row: usize, p: f64) -> f64 {
    let k = shard.feature_dim();
    let f = shard.features.row(row).transpose();
    let positive = shard.labels[row] == 1;
    let mut h = Matrix::zeros(k + 3, k + 3);
    let (ia, ib, iw) = (k, k + 1, k + 2);
    let (curv, idx) = if positive { (2.0 * (1.0 - p), ia) } else { (2.0 * p, ib) };
    h.view_mut((0, 0), (k, k)).copy_from(&(&f * f.transpose() * curv));
    for j in 0..k {
        h[(j, idx)] = -curv * f[j];
        h[(idx, j)] = -curv * f[j];
        let cross = if positive { -2.0 * (1.0 - p) } else { 2.0 * p } * f[j];
        h[(j, iw)] = cross;
        h[(iw, j)] = cross;
    }
    h[(idx, idx)] = curv;
    h[(iw, iw)] = -2.0 * p * (1.0 - p);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()))
}

impl MinimaxProblem for AurocLinear {
    fn name(&self) -> &str {
        "auroc"
    }

    fn dim_x(&self) -> usize {
        self.scorer_dim + 2
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn num_clients(&self) -> usize {
        self.shards.len()
    }

    fn shard(&self, client: usize) -> Option<&DataShard> {
        self.shards.get(client)
    }

    fn draw_batch(&self, client: usize, size: usize, rng: &mut Stream) -> Result<Minibatch> {
        check_client(self, client)?;
        Ok(Minibatch::from_indices(draw_indices(
            self.shards[client].len(),
            size,
            rng,
        )?))
    }

    fn full_batch(&self, client: usize) -> Minibatch {
        Minibatch::from_indices((0..self.shards[client].len()).collect())
    }

    fn batch_value(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> f64 {
        let shard = &self.shards[client];
        let (p, k, w) = (self.prior_p, self.scorer_dim, y[0]);
        let (a, b) = (x[k], x[k + 1]);
        let mut total = 0.0;
        for &r in &batch.indices {
            let h = self.score(shard, r, x);
            total += if shard.labels[r] == 1 {
                (1.0 - p) * (h - a).powi(2) - 2.0 * (1.0 + w) * (1.0 - p) * h
            } else {
                p * (h - b).powi(2) + 2.0 * (1.0 + w) * p * h
            };
        }
        total / batch.indices.len() as f64 - p * (1.0 - p) * w * w
    }

    fn batch_grads(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> (Vector, Vector) {
        let shard = &self.shards[client];
        let (p, k, w) = (self.prior_p, self.scorer_dim, y[0]);
        let (a, b) = (x[k], x[k + 1]);
        let mut gx = Vector::zeros(k + 2);
        let mut gw = 0.0;
        for &r in &batch.indices {
            let h = self.score(shard, r, x);
            let dh = if shard.labels[r] == 1 {
                gx[k] -= 2.0 * (1.0 - p) * (h - a);
                gw -= 2.0 * (1.0 - p) * h;
                2.0 * (1.0 - p) * (h - a) - 2.0 * (1.0 + w) * (1.0 - p)
            } else {
                gx[k + 1] -= 2.0 * p * (h - b);
                gw += 2.0 * p * h;
                2.0 * p * (h - b) + 2.0 * (1.0 + w) * p
            };
            for j in 0..k {
                gx[j] += dh * shard.features[(r, j)];
            }
        }
        let m = batch.indices.len() as f64;
        gx /= m;
        let gw = gw / m - 2.0 * p * (1.0 - p) * w;
        (gx, Vector::from_element(1, gw))
    }

    /// `w*` solves the scalar quadratic `∂F/∂w = 0`.
    fn inner_maximizer(&self, x: &Vector) -> Option<Vector> {
        let (_, gw0) = super::full_grads(self, x, &Vector::zeros(1));
        let curvature = 2.0 * self.prior_p * (1.0 - self.prior_p);
        Some(gw0 / curvature)
    }

    fn smoothness(&self) -> f64 {
        self.lipschitz
    }

    fn strong_concavity(&self) -> Option<f64> {
        Some(2.0 * self.prior_p * (1.0 - self.prior_p))
    }

    fn task_metric(&self, x: &Vector, _y: &Vector) -> Option<f64> {
        Some(self.test_auroc(x))
    }
}
