use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Hard cap for the exact assignment solver; the dense cost matrix and the
/// cubic worst case both become unreasonable beyond this.
pub const ASSIGNMENT_MAX_POINTS: usize = 4096;

fn check_dims(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Domain(format!(
            "clouds have different dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn squared_dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Dense squared-distance cost matrix, row-major `a.len() x b.len()`.
pub fn squared_cost_matrix(a: &PointCloud, b: &PointCloud) -> Result<Vec<f64>> {
    check_dims(a, b)?;
    let mut cost = Vec::with_capacity(a.len() * b.len());
    for p in a.iter() {
        for q in b.iter() {
            cost.push(squared_dist(p, q));
        }
    }
    Ok(cost)
}

/// Minimum-cost perfect assignment on a dense `n x n` cost matrix by
/// shortest augmenting paths with dual potentials. Returns the column
/// assigned to each row and the total cost (re-summed from the matrix, not
/// from the duals). Exact up to floating-point comparison of path lengths.
pub fn solve_assignment(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n);
    // Column n is a virtual start column; p[j] = row matched to column j,
    // with n meaning unmatched.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![n; n + 1];
    let mut way = vec![n; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 0..n {
        p[n] = i;
        let mut j0 = n;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = n;
            let row = &cost[i0 * n..(i0 + 1) * n];
            for j in 0..n {
                if !used[j] {
                    let cur = row[j] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == n {
                break;
            }
        }
        // Flip matched edges back along the alternating path.
        while j0 != n {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }
    let mut row_to_col = vec![n; n];
    for j in 0..n {
        if p[j] != n {
            row_to_col[p[j]] = j;
        }
    }
    let total = (0..n).map(|i| cost[i * n + row_to_col[i]]).sum();
    (row_to_col, total)
}

/// Exact Wasserstein-2 between two equal-size uniform clouds:
/// `sqrt(min_assignment mean squared distance)`.
pub fn w2_exact_assignment(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dims(a, b)?;
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "assignment needs equal cloud sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() > ASSIGNMENT_MAX_POINTS {
        return Err(Error::Resource(format!(
            "assignment solver capped at {ASSIGNMENT_MAX_POINTS} points, got {}",
            a.len()
        )));
    }
    let cost = squared_cost_matrix(a, b)?;
    let (_, total) = solve_assignment(&cost, a.len());
    Ok((total / a.len() as f64).sqrt())
}

/// Exact one-dimensional Wasserstein-2 between uniform clouds via sorted
/// samples. Sizes may differ: the quantile functions are integrated over the
/// merged dyadic partition, which reduces to the classic sorted pairing when
/// the sizes match.
pub fn w2_exact_1d(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(Error::Domain(format!(
            "one-dimensional transport needs d = 1 clouds, got {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut xs = a.as_flat().to_vec();
    let mut ys = b.as_flat().to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    // Integrate (F_a^{-1}(u) - F_b^{-1}(u))^2 over the merged breakpoints
    // {i/n} union {j/m}.
    let mut acc = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0f64;
    while i < n && j < m {
        let next_i = (i + 1) as f64 / n as f64;
        let next_j = (j + 1) as f64 / m as f64;
        let next = next_i.min(next_j);
        let diff = xs[i] - ys[j];
        acc += diff * diff * (next - u);
        u = next;
        if next_i <= next {
            i += 1;
        }
        if next_j <= next {
            j += 1;
        }
    }
    Ok(acc.sqrt())
}

/// Parameters for entropic transport. `epsilon = None` selects the
/// scale-relative default `0.01 x mean pairwise squared distance`.
#[derive(Debug, Clone, Copy)]
pub struct SinkhornParams {
    pub epsilon: Option<f64>,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self {
            epsilon: None,
            max_iterations: 500,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SinkhornOutput {
    /// Transport cost `<plan, cost>` of the converged plan.
    pub cost: f64,
    /// Regularization actually used (resolved default included).
    pub epsilon: f64,
    pub iterations: usize,
    /// Largest absolute marginal violation at exit.
    pub marginal_error: f64,
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Entropy-regularized transport cost between uniform clouds (sizes may
/// differ), computed with log-domain potential updates. Errors with the
/// achieved violation if the marginals fail to reach `tolerance` within
/// `max_iterations`.
pub fn sinkhorn_cost(a: &PointCloud, b: &PointCloud, params: SinkhornParams) -> Result<SinkhornOutput> {
    check_dims(a, b)?;
    let (n, m) = (a.len(), b.len());
    let cost = squared_cost_matrix(a, b)?;
    let epsilon = match params.epsilon {
        Some(e) => e,
        None => 0.01 * cost.iter().sum::<f64>() / (n * m) as f64,
    };
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!(
            "regularization epsilon = {epsilon} must be positive and finite"
        )));
    }
    if params.max_iterations == 0 {
        return Err(Error::Config("iteration cap must be at least 1".into()));
    }
    let log_a = (1.0 / n as f64).ln();
    let log_b = (1.0 / m as f64).ln();
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut iterations = 0;
    let mut violation = f64::INFINITY;
    while iterations < params.max_iterations {
        iterations += 1;
        for i in 0..n {
            let row = &cost[i * m..(i + 1) * m];
            let lse = logsumexp((0..m).map(|j| (g[j] - row[j]) / epsilon));
            f[i] = epsilon * (log_a - lse);
        }
        for j in 0..m {
            let lse = logsumexp((0..n).map(|i| (f[i] - cost[i * m + j]) / epsilon));
            g[j] = epsilon * (log_b - lse);
        }
        // Column marginals are exact right after the g update; the row
        // marginals measure convergence.
        violation = (0..n)
            .map(|i| {
                let row = &cost[i * m..(i + 1) * m];
                let sum: f64 = (0..m)
                    .map(|j| ((f[i] + g[j] - row[j]) / epsilon).exp())
                    .sum();
                (sum - 1.0 / n as f64).abs()
            })
            .fold(0.0f64, f64::max);
        if violation < params.tolerance {
            let cost_total: f64 = (0..n)
                .map(|i| {
                    let row = &cost[i * m..(i + 1) * m];
                    (0..m)
                        .map(|j| ((f[i] + g[j] - row[j]) / epsilon).exp() * row[j])
                        .sum::<f64>()
                })
                .sum();
            return Ok(SinkhornOutput {
                cost: cost_total,
                epsilon,
                iterations,
                marginal_error: violation,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[Vec<f64>]) -> PointCloud {
        PointCloud::from_rows(rows).unwrap()
    }

    #[test]
    fn one_dimensional_pair() {
        let a = cloud(&[vec![0.0], vec![1.0]]);
        let b = cloud(&[vec![2.0], vec![3.0]]);
        assert_eq!(w2_exact_1d(&a, &b).unwrap(), 2.0);
        assert_eq!(w2_exact_assignment(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn one_dimensional_uneven_sizes() {
        // F_a is constant 0; F_b jumps from 0 to 1 at u = 1/2, so the squared
        // difference integrates to 1/2.
        let a = cloud(&[vec![0.0]]);
        let b = cloud(&[vec![0.0], vec![1.0]]);
        let got = w2_exact_1d(&a, &b).unwrap();
        assert!((got - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_rejects_higher_dims() {
        let a = cloud(&[vec![0.0, 0.0]]);
        assert!(w2_exact_1d(&a, &a).is_err());
    }

    #[test]
    fn assignment_prefers_non_crossing_match() {
        let a = cloud(&[vec![0.0, 0.0], vec![1.0, 0.0]]);
        let b = cloud(&[vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(w2_exact_assignment(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn assignment_handles_permuted_identical_clouds() {
        let a = cloud(&[vec![3.0, 1.0], vec![-2.0, 0.5], vec![0.0, 0.0]]);
        let b = cloud(&[vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 0.5]]);
        assert_eq!(w2_exact_assignment(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn assignment_validates_inputs() {
        let a = cloud(&[vec![0.0], vec![1.0]]);
        let b = cloud(&[vec![0.0]]);
        assert!(w2_exact_assignment(&a, &b).is_err());
        let c = cloud(&[vec![0.0, 0.0]]);
        assert!(w2_exact_assignment(&a, &c).is_err());
    }

    #[test]
    fn sinkhorn_approaches_exact_cost_on_separated_blobs() {
        let a = cloud(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![-0.1, 0.0],
        ]);
        let b = cloud(&[
            vec![2.0, 0.0],
            vec![2.1, 0.0],
            vec![2.0, 0.1],
            vec![1.9, 0.0],
        ]);
        let exact = w2_exact_assignment(&a, &b).unwrap().powi(2);
        let out = sinkhorn_cost(
            &a,
            &b,
            SinkhornParams {
                epsilon: Some(0.02),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.marginal_error < 1e-7);
        assert!(
            (out.cost - exact).abs() < 0.02 * exact,
            "sinkhorn {} vs exact {exact}",
            out.cost
        );
    }

    #[test]
    fn sinkhorn_default_epsilon_is_scale_relative() {
        let a = cloud(&[vec![0.0], vec![1.0]]);
        let b = cloud(&[vec![10.0], vec![11.0]]);
        let out = sinkhorn_cost(&a, &b, SinkhornParams::default()).unwrap();
        // Mean pairwise squared distance is about 100, so the default epsilon
        // should land near 1.
        assert!(out.epsilon > 0.5 && out.epsilon < 2.0, "epsilon {}", out.epsilon);
    }

    #[test]
    fn sinkhorn_reports_non_convergence() {
        let a = cloud(&[vec![0.0], vec![1.0]]);
        let b = cloud(&[vec![5.0], vec![6.0]]);
        let err = sinkhorn_cost(
            &a,
            &b,
            SinkhornParams {
                epsilon: Some(1e-9),
                max_iterations: 3,
                tolerance: 1e-12,
            },
        )
        .unwrap_err();
        match err {
            Error::NonConvergence { iterations, violation } => {
                assert_eq!(iterations, 3);
                assert!(violation.is_finite());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sinkhorn_rejects_bad_epsilon() {
        let a = cloud(&[vec![0.0]]);
        assert!(sinkhorn_cost(
            &a,
            &a,
            SinkhornParams {
                epsilon: Some(0.0),
                ..Default::default()
            }
        )
        .is_err());
        assert!(sinkhorn_cost(
            &a,
            &a,
            SinkhornParams {
                epsilon: Some(-1.0),
                ..Default::default()
            }
        )
        .is_err());
    }
}
