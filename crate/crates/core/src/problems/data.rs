//! Synthetic datasets and label-skew partitioning across clients.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Matrix, Vector};
use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream, StreamFactory};

/// One client's local dataset. Rows of `features` are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataShard {
    pub client_id: usize,
    pub features: Matrix,
    pub labels: Vec<i64>,
}

impl DataShard {
    pub fn new(client_id: usize, features: Matrix, labels: Vec<i64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidState(format!("shard of client {client_id} is empty")));
        }
        if features.nrows() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "shard of client {client_id}: {} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        Ok(Self {
            client_id,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

/// A pooled dataset before partitioning.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<i64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sorted distinct labels.
    pub fn label_set(&self) -> Vec<i64> {
        let mut set = self.labels.clone();
        set.sort_unstable();
        set.dedup();
        set
    }

    fn subset(&self, rows: &[usize]) -> (Matrix, Vec<i64>) {
        let k = self.features.ncols();
        let features = Matrix::from_fn(rows.len(), k, |r, c| self.features[(rows[r], c)]);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        (features, labels)
    }
}

/// Generator for small synthetic classification tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// Isotropic unit-variance Gaussian blobs with labels `0..num_classes`.
    /// Class means are `separation` times random unit vectors.
    GaussianClasses {
        num_classes: usize,
        feature_dim: usize,
        separation: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class_weights: Option<Vec<f64>>,
    },
    /// Linearly separable binary task with labels `±1`: the two classes sit on
    /// opposite sides of a random hyperplane through the origin, at least
    /// `margin` apart. With `condition > 1` the features are then mapped
    /// through a fixed random linear map whose singular values spread
    /// log-evenly over `[1/condition, 1]`; the task stays separable.
    SeparableBinary {
        feature_dim: usize,
        positive_fraction: f64,
        margin: f64,
        #[serde(default = "unit", skip_serializing_if = "is_unit")]
        condition: f64,
    },
}

impl DatasetSpec {
    pub fn feature_dim(&self) -> usize {
        match self {
            DatasetSpec::GaussianClasses { feature_dim, .. } | DatasetSpec::SeparableBinary { feature_dim, .. } => {
                *feature_dim
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DatasetSpec::GaussianClasses {
                num_classes,
                feature_dim,
                separation,
                class_weights,
            } => {
                if *num_classes < 2 || *feature_dim == 0 || !separation.is_finite() {
                    return Err(Error::InvalidArgument(
                        "gaussian_classes needs num_classes >= 2, feature_dim >= 1 and finite separation".into(),
                    ));
                }
                if let Some(w) = class_weights {
                    if w.len() != *num_classes || w.iter().any(|&v| !(v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                        return Err(Error::InvalidArgument(
                            "class_weights must have one nonnegative entry per class".into(),
                        ));
                    }
                }
            }
            DatasetSpec::SeparableBinary {
                feature_dim,
                positive_fraction,
                margin,
                condition,
            } => {
                if *feature_dim == 0
                    || !(*positive_fraction > 0.0 && *positive_fraction < 1.0)
                    || !(*margin >= 0.0)
                    || !(*condition >= 1.0 && condition.is_finite())
                {
                    return Err(Error::InvalidArgument(
                        "separable_binary needs feature_dim >= 1, positive_fraction in (0,1), margin >= 0, condition >= 1"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Draws `n` samples.
    pub fn generate(&self, n: usize, rng: &mut Stream) -> Result<Dataset> {
        Ok(self.generate_sets(&[n], rng)?.remove(0))
    }

    /// Draws one task (class means, or hyperplane and feature map) and then one
    /// dataset per entry of `sizes`, each with its own exact class counts.
    pub fn generate_sets(&self, sizes: &[usize], rng: &mut Stream) -> Result<Vec<Dataset>> {
        self.validate()?;
        match self {
            DatasetSpec::GaussianClasses {
                num_classes,
                feature_dim,
                separation,
                class_weights,
            } => {
                let weights = class_weights.clone().unwrap_or_else(|| vec![1.0; *num_classes]);
                let means: Vec<Vector> = (0..*num_classes)
                    .map(|_| random_unit(*feature_dim, rng) * *separation)
                    .collect();
                let mut sets = Vec::with_capacity(sizes.len());
                for &n in sizes {
                    let counts = largest_remainder(n, &weights);
                    let mut rows: Vec<(Vector, i64)> = Vec::with_capacity(n);
                    for (c, &count) in counts.iter().enumerate() {
                        for _ in 0..count {
                            let noise = Vector::from_fn(*feature_dim, |_, _| rng.sample(StandardNormal));
                            rows.push((&means[c] + noise, c as i64));
                        }
                    }
                    rows.shuffle(rng);
                    sets.push(stack(rows, *feature_dim));
                }
                Ok(sets)
            }
            DatasetSpec::SeparableBinary {
                feature_dim,
                positive_fraction,
                margin,
                condition,
            } => {
                let normal = random_unit(*feature_dim, rng);
                let map = (*condition > 1.0).then(|| conditioning_map(*feature_dim, *condition, rng));
                let mut sets = Vec::with_capacity(sizes.len());
                for &n in sizes {
                    let positives = ((n as f64) * positive_fraction).round() as usize;
                    let mut rows = Vec::with_capacity(n);
                    for i in 0..n {
                        let label = if i < positives { 1 } else { -1 };
                        let z = Vector::from_fn(*feature_dim, |_, _| rng.sample(StandardNormal));
                        let along = z.dot(&normal);
                        let offset: f64 = rng.sample::<f64, _>(StandardNormal).abs();
                        let t = label as f64 * (0.5 * margin + offset);
                        let point = z - &normal * along + &normal * t;
                        let point = match &map {
                            Some(m) => m * point,
                            None => point,
                        };
                        rows.push((point, label));
                    }
                    rows.shuffle(rng);
                    sets.push(stack(rows, *feature_dim));
                }
                Ok(sets)
            }
        }
    }
}

fn stack(rows: Vec<(Vector, i64)>, k: usize) -> Dataset {
    let features = Matrix::from_fn(rows.len(), k, |r, c| rows[r].0[c]);
    let labels = rows.into_iter().map(|(_, l)| l).collect();
    Dataset { features, labels }
}

fn unit() -> f64 {
    1.0
}

fn is_unit(v: &f64) -> bool {
    *v == 1.0
}

/// `U diag(s) Uᵀ` with a random orthogonal `U` and `s` log-spaced from 1 down to `1/condition`.
fn conditioning_map(dim: usize, condition: f64, rng: &mut Stream) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let u = g.qr().q();
    let s = Vector::from_fn(dim, |j, _| {
        if dim == 1 {
            1.0
        } else {
            condition.powf(-(j as f64) / (dim - 1) as f64)
        }
    });
    &u * Matrix::from_diagonal(&s) * u.transpose()
}

fn random_unit(dim: usize, rng: &mut Stream) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Splits `total` into integer parts proportional to `weights`, assigning
/// leftovers to the largest fractional remainders (ties to the lowest index).
pub(crate) fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Label-skew partition: for every label, client proportions are drawn from a
/// symmetric Dirichlet with concentration `heterogeneity`. Zero sends each
/// label to a single client; `+inf` gives an even split.
pub fn partition_dirichlet(
    dataset: &Dataset,
    num_clients: usize,
    heterogeneity: f64,
    rng: &mut Stream,
) -> Result<Vec<DataShard>> {
    if !(heterogeneity >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "heterogeneity must be >= 0, got {heterogeneity}"
        )));
    }
    if num_clients == 0 || dataset.len() < num_clients {
        return Err(Error::InvalidArgument(format!(
            "need at least one sample per client ({} samples, {} clients)",
            dataset.len(),
            num_clients
        )));
    }
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); num_clients];
    for label in dataset.label_set() {
        let members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == label).collect();
        let proportions = dirichlet_proportions(num_clients, heterogeneity, rng)?;
        let counts = largest_remainder(members.len(), &proportions);
        let mut cursor = 0;
        for (client, &count) in counts.iter().enumerate() {
            assignment[client].extend_from_slice(&members[cursor..cursor + count]);
            cursor += count;
        }
    }
    // every shard must be non-empty; borrow from the largest one
    while let Some(empty) = assignment.iter().position(|a| a.is_empty()) {
        let donor = (0..num_clients)
            .max_by(|&a, &b| assignment[a].len().cmp(&assignment[b].len()).then(b.cmp(&a)))
            .expect("at least one client");
        assignment[donor].sort_unstable();
        let moved = assignment[donor].pop().expect("donor has samples");
        assignment[empty].push(moved);
    }
    assignment
        .into_iter()
        .enumerate()
        .map(|(client, mut rows)| {
            rows.sort_unstable();
            let (features, labels) = dataset.subset(&rows);
            DataShard::new(client, features, labels)
        })
        .collect()
}

fn dirichlet_proportions(n: usize, concentration: f64, rng: &mut Stream) -> Result<Vec<f64>> {
    if concentration.is_infinite() {
        return Ok(vec![1.0; n]);
    }
    if concentration == 0.0 {
        let mut p = vec![0.0; n];
        p[rng.random_range(0..n)] = 1.0;
        return Ok(p);
    }
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    if draws.iter().sum::<f64>() > 0.0 {
        Ok(draws)
    } else {
        // all draws underflowed: the limit is a single-client assignment
        let mut p = vec![0.0; n];
        p[rng.random_range(0..n)] = 1.0;
        Ok(p)
    }
}

/// Generates `total_samples` points and splits them over `num_clients` with
/// label skew `heterogeneity`. Deterministic in `seed`.
pub fn make_heterogeneous_shards(
    spec: &DatasetSpec,
    total_samples: usize,
    num_clients: usize,
    heterogeneity: f64,
    seed: u64,
) -> Result<Vec<DataShard>> {
    if total_samples < num_clients {
        return Err(Error::InvalidArgument(format!(
            "total samples ({total_samples}) must be at least the number of clients ({num_clients})"
        )));
    }
    let streams = StreamFactory::new(seed);
    let dataset = spec.generate(total_samples, &mut streams.stream(0, Purpose::Data))?;
    partition_dirichlet(
        &dataset,
        num_clients,
        heterogeneity,
        &mut streams.stream(1, Purpose::Data),
    )
}

/// Writes shards as CSV with header `client_id,label,f0,...,f{k-1}`.
pub fn write_shards_csv<W: Write>(writer: W, shards: &[DataShard]) -> Result<()> {
    let k = shards.first().map(|s| s.feature_dim()).unwrap_or(0);
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["client_id".to_string(), "label".to_string()];
    header.extend((0..k).map(|i| format!("f{i}")));
    out.write_record(&header)?;
    for shard in shards {
        if shard.feature_dim() != k {
            return Err(Error::InvalidArgument("shards disagree on feature dimension".into()));
        }
        for r in 0..shard.len() {
            let mut row = vec![shard.client_id.to_string(), shard.labels[r].to_string()];
            row.extend((0..k).map(|c| shard.features[(r, c)].to_string()));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_shards_csv`]. Client ids must cover
/// `0..N` without gaps.
pub fn read_shards_csv<R: Read>(reader: R) -> Result<Vec<DataShard>> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    if header.len() < 2 || &header[0] != "client_id" || &header[1] != "label" {
        return Err(Error::InvalidArgument(
            "expected header `client_id,label,f0,...`".into(),
        ));
    }
    let k = header.len() - 2;
    let mut rows: Vec<Vec<(Vec<f64>, i64)>> = Vec::new();
    for record in input.records() {
        let record = record?;
        let parse_err = |what: &str| Error::InvalidArgument(format!("unparsable {what} in shard CSV"));
        let client: usize = record[0].parse().map_err(|_| parse_err("client_id"))?;
        let label: i64 = record[1].parse().map_err(|_| parse_err("label"))?;
        let feats = (2..2 + k)
            .map(|i| record[i].parse::<f64>().map_err(|_| parse_err("feature")))
            .collect::<Result<Vec<_>>>()?;
        if rows.len() <= client {
            rows.resize_with(client + 1, Vec::new);
        }
        rows[client].push((feats, label));
    }
    rows.into_iter()
        .enumerate()
        .map(|(client, samples)| {
            let features = Matrix::from_fn(samples.len(), k, |r, c| samples[r].0[c]);
            let labels = samples.iter().map(|s| s.1).collect();
            DataShard::new(client, features, labels)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> DatasetSpec {
        DatasetSpec::GaussianClasses {
            num_classes: 3,
            feature_dim: 4,
            separation: 2.0,
            class_weights: None,
        }
    }

    #[test]
    fn largest_remainder_preserves_total() {
        assert_eq!(largest_remainder(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(largest_remainder(7, &[0.0, 1.0]), vec![0, 7]);
    }

    #[test]
    fn single_client_gets_whole_dataset() {
        let streams = StreamFactory::new(5);
        let data = spec().generate(60, &mut streams.stream(0, Purpose::Data)).unwrap();
        let shards = make_heterogeneous_shards(&spec(), 60, 1, 0.5, 5).unwrap();
        assert_eq!(shards.len(), 1);
        assert_eq!(shards[0].features, data.features);
        assert_eq!(shards[0].labels, data.labels);
    }

    #[test]
    fn iid_limit_matches_global_frequencies() {
        let shards = make_heterogeneous_shards(&spec(), 3000, 2, 1e6, 11).unwrap();
        let total = 3000.0;
        for c in 0..3 {
            let global = shards
                .iter()
                .map(|s| s.labels.iter().filter(|&&l| l == c).count())
                .sum::<usize>() as f64
                / total;
            for s in &shards {
                let local = s.labels.iter().filter(|&&l| l == c).count() as f64 / s.len() as f64;
                assert!((local - global).abs() <= 0.02, "class {c}: {local} vs {global}");
            }
        }
    }

    #[test]
    fn zero_heterogeneity_gives_single_label_shards_when_possible() {
        let shards = make_heterogeneous_shards(&spec(), 300, 3, 0.0, 2).unwrap();
        assert!(shards.iter().all(|s| !s.is_empty()));
        let total: usize = shards.iter().map(|s| s.len()).sum();
        assert_eq!(total, 300);
    }

    #[test]
    fn negative_heterogeneity_rejected() {
        assert!(matches!(
            make_heterogeneous_shards(&spec(), 30, 2, -1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn partition_is_deterministic() {
        let a = make_heterogeneous_shards(&spec(), 200, 4, 0.3, 9).unwrap();
        let b = make_heterogeneous_shards(&spec(), 200, 4, 0.3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separable_binary_has_margin() {
        let spec = DatasetSpec::SeparableBinary {
            feature_dim: 5,
            positive_fraction: 0.2,
            margin: 1.0,
            condition: 1.0,
        };
        let mut rng = StreamFactory::new(3).stream(0, Purpose::Data);
        let data = spec.generate(500, &mut rng).unwrap();
        let positives = data.labels.iter().filter(|&&l| l == 1).count();
        assert_eq!(positives, 100);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let shards = make_heterogeneous_shards(&spec(), 50, 3, 1.0, 4).unwrap();
        let mut buf = Vec::new();
        write_shards_csv(&mut buf, &shards).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("client_id,label,f0,f1,f2,f3\n"));
        let back = read_shards_csv(buf.as_slice()).unwrap();
        assert_eq!(back, shards);
    }
}
