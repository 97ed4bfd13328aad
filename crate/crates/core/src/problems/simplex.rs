use super::Vector;

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(y: &Vector) -> Vector {
    let n = y.len();
    if n == 0 {
        return y.clone();
    }
    let mut sorted: Vec<f64> = y.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}
