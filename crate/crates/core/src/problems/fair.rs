//! Worst-class-loss classification: `min_x max_{y ∈ Δ_C} (1/N) Σ_i Σ_c y_c L^i_c(x)`
//! with a linear softmax scorer.
//!
//! `L^i_c(x) = (C / n_i) Σ_{j ∈ shard i, label_j = c} CE_j(x)`, so that a sample
//! drawn uniformly from the shard has loss `C · y_{label} · CE(x; ξ)` and the
//! uniform weighting `y = 1/C` recovers the plain average cross-entropy.

use super::{check_client, draw_indices, DataShard, DatasetSpec, Minibatch, MinimaxProblem, Vector, YConstraint};
use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone)]
pub struct FairClassification {
    shards: Vec<DataShard>,
    num_classes: usize,
    feature_dim: usize,
    lipschitz: f64,
}

impl FairClassification {
    pub fn new(shards: Vec<DataShard>, num_classes: usize) -> Result<Self> {
        if shards.is_empty() || num_classes < 2 {
            return Err(Error::InvalidArgument("need at least one shard and two classes".into()));
        }
        let feature_dim = shards[0].feature_dim();
        let mut lipschitz = 0.0f64;
        for (i, s) in shards.iter().enumerate() {
            if s.is_empty() || s.client_id != i || s.feature_dim() != feature_dim {
                return Err(Error::InvalidArgument(format!(
                    "shard {i} is empty, misnumbered or has wrong width"
                )));
            }
            if s.labels.iter().any(|&l| l < 0 || l as usize >= num_classes) {
                return Err(Error::InvalidArgument(format!(
                    "shard {i} has labels outside 0..{num_classes}"
                )));
            }
            lipschitz = lipschitz.max(client_smoothness(s, num_classes));
        }
        Ok(Self {
            shards,
            num_classes,
            feature_dim,
            lipschitz,
        })
    }

    /// Generates Gaussian-blob data and splits it with Dirichlet label skew.
    pub fn generate(
        spec: &DatasetSpec,
        total_samples: usize,
        clients: usize,
        heterogeneity: f64,
        seed: u64,
    ) -> Result<Self> {
        let num_classes = match spec {
            DatasetSpec::GaussianClasses { num_classes, .. } => *num_classes,
            DatasetSpec::SeparableBinary { .. } => {
                return Err(Error::InvalidArgument(
                    "fair classification needs a multi-class dataset".into(),
                ))
            }
        };
        let shards = super::make_heterogeneous_shards(spec, total_samples, clients, heterogeneity, seed)?;
        Self::new(shards, num_classes)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn shards(&self) -> &[DataShard] {
        &self.shards
    }

    /// `(L_c(x))_c = (1/N) Σ_i L^i_c(x)`, which is also `∇_y F` at any `y`.
    pub fn class_losses(&self, x: &Vector) -> Vector {
        let n = self.shards.len() as f64;
        let mut total = Vector::zeros(self.num_classes);
        for client in 0..self.shards.len() {
            total += self.client_class_losses(client, x) / n;
        }
        total
    }

    fn client_class_losses(&self, client: usize, x: &Vector) -> Vector {
        let shard = &self.shards[client];
        let c = self.num_classes as f64;
        let mut out = Vector::zeros(self.num_classes);
        let mut logits = vec![0.0; self.num_classes];
        for r in 0..shard.len() {
            let label = shard.labels[r] as usize;
            self.logits(shard, r, x, &mut logits);
            out[label] += cross_entropy(&logits, label);
        }
        out * (c / shard.len() as f64)
    }

    fn logits(&self, shard: &DataShard, row: usize, x: &Vector, out: &mut [f64]) {
        let stride = self.feature_dim + 1;
        for (c, o) in out.iter_mut().enumerate() {
            let w = &x.as_slice()[c * stride..(c + 1) * stride];
            let mut acc = w[self.feature_dim];
            for j in 0..self.feature_dim {
                acc += w[j] * shard.features[(row, j)];
            }
            *o = acc;
        }
    }
}

/// Bound on the joint Hessian norm of one client's loss over all `x` and all
/// `y` in the simplex. The x-block is at most `½ C max_c λ_max(S_c)` with
/// `S_c = (1/n) Σ_{label=c} f̃ f̃ᵀ` (softmax curvature is at most ½), and
/// column `c` of the cross block has norm at most `(C/n) Σ_{label=c} √2‖f̃‖`.
fn client_smoothness(shard: &DataShard, num_classes: usize) -> f64 {
    let k = shard.feature_dim() + 1;
    let n = shard.len() as f64;
    let c = num_classes as f64;
    let mut second = vec![nalgebra::DMatrix::<f64>::zeros(k, k); num_classes];
    let mut cross = vec![0.0; num_classes];
    for r in 0..shard.len() {
        let label = shard.labels[r] as usize;
        let mut f = Vector::from_element(k, 1.0);
        f.rows_mut(0, k - 1).copy_from(&shard.features.row(r).transpose());
        second[label].ger(1.0 / n, &f, &f, 1.0);
        cross[label] += std::f64::consts::SQRT_2 * f.norm() * c / n;
    }
    let xx = 0.5
        * c
        * second
            .into_iter()
            .map(|m| m.symmetric_eigenvalues().max())
            .fold(0.0, f64::max);
    let xy = cross.iter().map(|v| v * v).sum::<f64>().sqrt();
    0.5 * (xx + (xx * xx + 4.0 * xy * xy).sqrt())
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

impl MinimaxProblem for FairClassification {
    fn name(&self) -> &str {
        "fair"
    }

    fn dim_x(&self) -> usize {
        self.num_classes * (self.feature_dim + 1)
    }

    fn dim_y(&self) -> usize {
        self.num_classes
    }

    fn num_clients(&self) -> usize {
        self.shards.len()
    }

    fn y_constraint(&self) -> YConstraint {
        YConstraint::Simplex
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
        let c = self.num_classes as f64;
        let mut logits = vec![0.0; self.num_classes];
        let mut total = 0.0;
        for &r in &batch.indices {
            let label = shard.labels[r] as usize;
            self.logits(shard, r, x, &mut logits);
            total += c * y[label] * cross_entropy(&logits, label);
        }
        total / batch.indices.len() as f64
    }

    fn batch_grads(&self, client: usize, x: &Vector, y: &Vector, batch: &Minibatch) -> (Vector, Vector) {
        let shard = &self.shards[client];
        let c = self.num_classes as f64;
        let stride = self.feature_dim + 1;
        let mut gx = Vector::zeros(self.dim_x());
        let mut gy = Vector::zeros(self.dim_y());
        let mut logits = vec![0.0; self.num_classes];
        for &r in &batch.indices {
            let label = shard.labels[r] as usize;
            self.logits(shard, r, x, &mut logits);
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let own = logits[label];
            let mut sum = 0.0;
            for l in logits.iter_mut() {
                *l = (*l - max).exp();
                sum += *l;
            }
            // logits now hold unnormalized probabilities
            gy[label] += c * (max + sum.ln() - own);
            let weight = c * y[label];
            for (k, &e) in logits.iter().enumerate() {
                let mut coeff = e / sum;
                if k == label {
                    coeff -= 1.0;
                }
                coeff *= weight;
                let row = &mut gx.as_mut_slice()[k * stride..(k + 1) * stride];
                for j in 0..self.feature_dim {
                    row[j] += coeff * shard.features[(r, j)];
                }
                row[self.feature_dim] += coeff;
            }
        }
        let m = batch.indices.len() as f64;
        (gx / m, gy / m)
    }

    fn phi_value(&self, x: &Vector) -> Option<f64> {
        Some(self.class_losses(x).max())
    }

    fn smoothness(&self) -> f64 {
        self.lipschitz
    }

    /// Worst class loss `max_c L_c(x)`.
    fn task_metric(&self, x: &Vector, _y: &Vector) -> Option<f64> {
        self.phi_value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{exact_full_grads, full_value};

    fn problem(heterogeneity: f64) -> FairClassification {
        let spec = DatasetSpec::GaussianClasses {
            num_classes: 3,
            feature_dim: 3,
            separation: 1.5,
            class_weights: None,
        };
        FairClassification::generate(&spec, 240, 4, heterogeneity, 3).unwrap()
    }

    #[test]
    fn uniform_weights_give_plain_average_cross_entropy() {
        // identical shards: replicate one shard on every client
        let base = problem(1.0);
        let shard = base.shards()[0].clone();
        let shards: Vec<DataShard> = (0..3)
            .map(|i| DataShard::new(i, shard.features.clone(), shard.labels.clone()).unwrap())
            .collect();
        let p = FairClassification::new(shards, 3).unwrap();
        let x = Vector::from_fn(p.dim_x(), |i, _| ((i * 7) % 5) as f64 * 0.1 - 0.2);
        let y = Vector::from_element(3, 1.0 / 3.0);
        let (gx, _) = exact_full_grads(&p, &x, &y).unwrap();
        // plain averaged CE gradient computed directly
        let stride = 4;
        let mut plain = Vector::zeros(p.dim_x());
        let mut logits = vec![0.0; 3];
        for r in 0..shard.len() {
            p.logits(&shard, r, &x, &mut logits);
            let lse = log_sum_exp(&logits);
            let label = shard.labels[r] as usize;
            for k in 0..3 {
                let coeff = (logits[k] - lse).exp() - if k == label { 1.0 } else { 0.0 };
                for j in 0..3 {
                    plain[k * stride + j] += coeff * shard.features[(r, j)];
                }
                plain[k * stride + 3] += coeff;
            }
        }
        plain /= shard.len() as f64;
        assert!((gx - plain).norm() < 1e-12);
    }

    #[test]
    fn objective_is_linear_in_y() {
        let p = problem(0.3);
        let x = Vector::from_fn(p.dim_x(), |i, _| (i as f64 * 0.37).sin());
        let y1 = Vector::from_column_slice(&[0.2, 0.5, 0.3]);
        let y2 = Vector::from_column_slice(&[0.7, 0.1, 0.2]);
        let t = 0.35;
        let mix = &y1 * t + &y2 * (1.0 - t);
        let lhs = full_value(&p, &x, &mix);
        let rhs = t * full_value(&p, &x, &y1) + (1.0 - t) * full_value(&p, &x, &y2);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn phi_is_worst_class_loss() {
        let p = problem(0.3);
        let x = Vector::from_fn(p.dim_x(), |i, _| (i as f64).cos() * 0.3);
        let losses = p.class_losses(&x);
        let phi = p.phi_value(&x).unwrap();
        for c in 0..3 {
            let mut e = Vector::zeros(3);
            e[c] = 1.0;
            assert!(full_value(&p, &x, &e) <= phi + 1e-12);
        }
        assert_eq!(phi, losses.max());
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let shard = DataShard::new(0, nalgebra::DMatrix::zeros(2, 2), vec![0, 5]).unwrap();
        assert!(FairClassification::new(vec![shard], 3).is_err());
    }
}
