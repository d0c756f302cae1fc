use crate::barycenter::combine_grids;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::ot::{sinkhorn_cost, SinkhornParams};
use crate::quantile::QuantileGrid;
use crate::tree::MassTree;
use rayon::prelude::*;

/// Largest acceptable 1-norm condition number for the covariate covariance;
/// beyond this the normal equations are treated as numerically singular.
const MAX_CONDITION: f64 = 1e14;

/// Cholesky factorization of a small symmetric positive-definite matrix with
/// an exact 1-norm condition number (the matrix is tiny, so the inverse is
/// affordable).
#[derive(Debug, Clone)]
struct SpdFactor {
    dim: usize,
    lower: Vec<f64>,
    condition: f64,
}

impl SpdFactor {
    fn new(matrix: &[f64], dim: usize) -> Result<Self> {
        assert_eq!(matrix.len(), dim * dim);
        let max_diag = (0..dim)
            .map(|j| matrix[j * dim + j])
            .fold(0.0f64, f64::max);
        let mut lower = vec![0.0f64; dim * dim];
        for j in 0..dim {
            for i in j..dim {
                let mut sum = matrix[i * dim + j];
                for k in 0..j {
                    sum -= lower[i * dim + k] * lower[j * dim + k];
                }
                if i == j {
                    if !(sum > 1e-14 * max_diag) || !sum.is_finite() {
                        return Err(Error::LinearAlgebra {
                            message: format!(
                                "covariance is numerically singular at pivot {j}"
                            ),
                            condition: f64::INFINITY,
                        });
                    }
                    lower[j * dim + j] = sum.sqrt();
                } else {
                    lower[i * dim + j] = sum / lower[j * dim + j];
                }
            }
        }
        let mut factor = Self {
            dim,
            lower,
            condition: f64::NAN,
        };
        factor.condition = factor.estimate_condition(matrix);
        if !factor.condition.is_finite() || factor.condition > MAX_CONDITION {
            return Err(Error::LinearAlgebra {
                message: "covariance is ill-conditioned".into(),
                condition: factor.condition,
            });
        }
        Ok(factor)
    }

    /// Solves `A z = rhs` via the two triangular systems.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut z = rhs.to_vec();
        for i in 0..d {
            for k in 0..i {
                z[i] -= self.lower[i * d + k] * z[k];
            }
            z[i] /= self.lower[i * d + i];
        }
        for i in (0..d).rev() {
            for k in i + 1..d {
                z[i] -= self.lower[k * d + i] * z[k];
            }
            z[i] /= self.lower[i * d + i];
        }
        z
    }

    fn estimate_condition(&self, matrix: &[f64]) -> f64 {
        let d = self.dim;
        let norm = |m: &dyn Fn(usize, usize) -> f64| -> f64 {
            (0..d)
                .map(|j| (0..d).map(|i| m(i, j).abs()).sum::<f64>())
                .fold(0.0f64, f64::max)
        };
        let a_norm = norm(&|i, j| matrix[i * d + j]);
        let mut inv = vec![0.0f64; d * d];
        for j in 0..d {
            let mut e = vec![0.0f64; d];
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..d {
                inv[i * d + j] = col[i];
            }
        }
        let inv_norm = norm(&|i, j| inv[i * d + j]);
        a_norm * inv_norm
    }
}

fn sample_responses(responses: &[MassTree], grid: Option<usize>) -> Result<(Vec<QuantileGrid>, usize)> {
    if responses.is_empty() {
        return Err(Error::Data("need at least one response distribution".into()));
    }
    let dim = responses[0].dim();
    for (k, t) in responses.iter().enumerate() {
        if t.dim() != dim {
            return Err(Error::Data(format!(
                "response {k} has dimension {}, expected {dim}",
                t.dim()
            )));
        }
    }
    let g = match grid {
        Some(g) if g >= 1 => g,
        Some(g) => return Err(Error::Config(format!("grid size {g} must be at least 1"))),
        None => 1usize << responses.iter().map(|t| t.depth()).max().unwrap(),
    };
    let grids = responses
        .iter()
        .map(|t| t.sample_grid(g))
        .collect::<Result<Vec<_>>>()?;
    Ok((grids, g))
}

fn check_weight_sum(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Weight(format!(
            "regression weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Per-point leave-one-out diagnostics under the squared grid metric.
#[derive(Debug, Clone)]
pub struct LooReport {
    /// Squared distance between each held-out response and its prediction.
    pub per_point: Vec<f64>,
    pub mean_squared_error: f64,
}

/// Global distribution-on-vector regression: weights are the affine
/// projection coefficients `(1 + (X_i - mean)' Cov^{-1} (x - mean)) / m`,
/// which sum to one identically, and the prediction is the weighted
/// quantile-grid combination under those weights.
#[derive(Debug, Clone)]
pub struct GlobalFrechet {
    covariates: PointCloud,
    mean: Vec<f64>,
    factor: SpdFactor,
    responses: Vec<QuantileGrid>,
    grid: usize,
}

fn covariate_stats(points: &PointCloud, skip: Option<usize>) -> Result<(Vec<f64>, SpdFactor, usize)> {
    let p = points.dim();
    let kept: Vec<usize> = (0..points.len()).filter(|&i| Some(i) != skip).collect();
    let m = kept.len();
    if m < 2 {
        return Err(Error::Data(format!(
            "need at least 2 covariate points, got {m}"
        )));
    }
    let mut mean = vec![0.0f64; p];
    for &i in &kept {
        for (slot, &v) in mean.iter_mut().zip(points.point(i)) {
            *slot += v;
        }
    }
    for slot in &mut mean {
        *slot /= m as f64;
    }
    let mut cov = vec![0.0f64; p * p];
    for &i in &kept {
        let row = points.point(i);
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in 0..p {
                cov[a * p + b] += da * (row[b] - mean[b]);
            }
        }
    }
    for slot in &mut cov {
        *slot /= m as f64;
    }
    let factor = SpdFactor::new(&cov, p)?;
    Ok((mean, factor, m))
}

fn global_weights_core(
    points: &PointCloud,
    mean: &[f64],
    factor: &SpdFactor,
    m_eff: usize,
    skip: Option<usize>,
    x: &[f64],
) -> Vec<f64> {
    let centered: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let z = factor.solve(&centered);
    (0..points.len())
        .map(|i| {
            if Some(i) == skip {
                return 0.0;
            }
            let dot: f64 = points
                .point(i)
                .iter()
                .zip(mean)
                .zip(&z)
                .map(|((v, mu), zk)| (v - mu) * zk)
                .sum();
            (1.0 + dot) / m_eff as f64
        })
        .collect()
}

impl GlobalFrechet {
    pub fn fit(
        covariates: &PointCloud,
        responses: &[MassTree],
        grid: Option<usize>,
    ) -> Result<Self> {
        if covariates.len() != responses.len() {
            return Err(Error::Data(format!(
                "{} covariate points but {} responses",
                covariates.len(),
                responses.len()
            )));
        }
        let (grids, g) = sample_responses(responses, grid)?;
        let (mean, factor, _) = covariate_stats(covariates, None)?;
        Ok(Self {
            covariates: covariates.clone(),
            mean,
            factor,
            responses: grids,
            grid: g,
        })
    }

    pub fn len(&self) -> usize {
        self.covariates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariates.is_empty()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.dim()
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Condition number of the covariate covariance used by the weights.
    pub fn condition(&self) -> f64 {
        self.factor.condition
    }

    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.covariates.dim() {
            return Err(Error::Domain(format!(
                "query has dimension {}, expected {}",
                x.len(),
                self.covariates.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("query coordinates must be finite".into()));
        }
        Ok(global_weights_core(
            &self.covariates,
            &self.mean,
            &self.factor,
            self.covariates.len(),
            None,
            x,
        ))
    }

    pub fn predict(&self, x: &[f64]) -> Result<QuantileGrid> {
        let weights = self.weights(x)?;
        check_weight_sum(&weights)?;
        combine_grids(&self.responses, &weights)
    }

    /// Refits the covariate statistics without each point in turn and scores
    /// the held-out response under the squared grid metric.
    pub fn leave_one_out(&self) -> Result<LooReport> {
        let m = self.covariates.len();
        if m < 3 {
            return Err(Error::Data(format!(
                "leave-one-out needs at least 3 points, got {m}"
            )));
        }
        let mut per_point = Vec::with_capacity(m);
        for i in 0..m {
            let (mean, factor, m_eff) = covariate_stats(&self.covariates, Some(i))?;
            let weights = global_weights_core(
                &self.covariates,
                &mean,
                &factor,
                m_eff,
                Some(i),
                self.covariates.point(i),
            );
            check_weight_sum(&weights)?;
            let pred = combine_grids(&self.responses, &weights)?;
            per_point.push(squared_grid_distance(&pred, &self.responses[i]));
        }
        let mean_squared_error = per_point.iter().sum::<f64>() / m as f64;
        Ok(LooReport {
            per_point,
            mean_squared_error,
        })
    }
}

fn squared_grid_distance(a: &QuantileGrid, b: &QuantileGrid) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.as_flat().iter().zip(b.as_flat()) {
        acc += (x - y) * (x - y);
    }
    acc / a.grid() as f64
}

fn epanechnikov_scaled(u: f64, h: f64) -> f64 {
    let t = u / h;
    if t.abs() >= 1.0 {
        0.0
    } else {
        0.75 * (1.0 - t * t) / h
    }
}

fn local_weights_core(
    xs: &[f64],
    skip: Option<usize>,
    x: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let m_eff = xs.len() - usize::from(skip.is_some());
    let kernel: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            if Some(i) == skip {
                0.0
            } else {
                epanechnikov_scaled(xi - x, h)
            }
        })
        .collect();
    let mut inside: Vec<f64> = xs
        .iter()
        .zip(&kernel)
        .filter(|&(_, &k)| k > 0.0)
        .map(|(&xi, _)| xi)
        .collect();
    inside.sort_by(|a, b| a.partial_cmp(b).unwrap());
    inside.dedup();
    if inside.len() < 2 {
        return Err(Error::Bandwidth(format!(
            "bandwidth {h} leaves fewer than 2 distinct covariates near x = {x}"
        )));
    }
    let mut mu = [0.0f64; 3];
    for (&xi, &k) in xs.iter().zip(&kernel) {
        let d = xi - x;
        mu[0] += k;
        mu[1] += k * d;
        mu[2] += k * d * d;
    }
    for slot in &mut mu {
        *slot /= m_eff as f64;
    }
    let sigma0 = mu[0] * mu[2] - mu[1] * mu[1];
    if !(sigma0 > 1e-12 * mu[0] * mu[2]) || !sigma0.is_finite() {
        return Err(Error::Bandwidth(format!(
            "local window at x = {x} is numerically degenerate"
        )));
    }
    let mut weights: Vec<f64> = xs
        .iter()
        .zip(&kernel)
        .map(|(&xi, &k)| k * (mu[2] - mu[1] * (xi - x)) / (m_eff as f64 * sigma0))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Bandwidth(format!(
            "local weights at x = {x} collapsed to a non-positive total"
        )));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Local distribution-on-scalar regression with the parabolic kernel.
/// Weights follow the local-linear form and are renormalized to sum to one;
/// the prediction is the weighted quantile-grid combination.
#[derive(Debug, Clone)]
pub struct LocalFrechet {
    xs: Vec<f64>,
    responses: Vec<QuantileGrid>,
    grid: usize,
    bandwidth: f64,
}

impl LocalFrechet {
    pub fn fit(
        covariates: &PointCloud,
        responses: &[MassTree],
        bandwidth: Option<f64>,
        grid: Option<usize>,
    ) -> Result<Self> {
        if covariates.dim() != 1 {
            return Err(Error::Domain(format!(
                "local regression takes scalar covariates, got dimension {}",
                covariates.dim()
            )));
        }
        if covariates.len() != responses.len() {
            return Err(Error::Data(format!(
                "{} covariate points but {} responses",
                covariates.len(),
                responses.len()
            )));
        }
        if covariates.len() < 2 {
            return Err(Error::Data("need at least 2 points".into()));
        }
        let (grids, g) = sample_responses(responses, grid)?;
        let xs: Vec<f64> = covariates.as_flat().to_vec();
        let bandwidth = match bandwidth {
            Some(h) => {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(Error::Config(format!(
                        "bandwidth {h} must be positive and finite"
                    )));
                }
                h
            }
            None => select_bandwidth(&xs, &grids)?,
        };
        Ok(Self {
            xs,
            responses: grids,
            grid: g,
            bandwidth,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn weights(&self, x: f64) -> Result<Vec<f64>> {
        if !x.is_finite() {
            return Err(Error::Domain("query must be finite".into()));
        }
        local_weights_core(&self.xs, None, x, self.bandwidth)
    }

    pub fn predict(&self, x: f64) -> Result<QuantileGrid> {
        let weights = self.weights(x)?;
        check_weight_sum(&weights)?;
        combine_grids(&self.responses, &weights)
    }

    pub fn leave_one_out(&self) -> Result<LooReport> {
        let m = self.xs.len();
        if m < 3 {
            return Err(Error::Data(format!(
                "leave-one-out needs at least 3 points, got {m}"
            )));
        }
        let mut per_point = Vec::with_capacity(m);
        for i in 0..m {
            let weights = local_weights_core(&self.xs, Some(i), self.xs[i], self.bandwidth)?;
            check_weight_sum(&weights)?;
            let pred = combine_grids(&self.responses, &weights)?;
            per_point.push(squared_grid_distance(&pred, &self.responses[i]));
        }
        let mean_squared_error = per_point.iter().sum::<f64>() / m as f64;
        Ok(LooReport {
            per_point,
            mean_squared_error,
        })
    }
}

/// Leave-one-out bandwidth search over a log-spaced grid between twice the
/// average covariate spacing and the full covariate range. Candidates whose
/// windows degenerate on any fold are skipped; the survivor with the lowest
/// cross-validated squared grid error wins.
pub fn select_bandwidth(xs: &[f64], responses: &[QuantileGrid]) -> Result<f64> {
    let m = xs.len();
    if m < 3 {
        return Err(Error::Data(format!(
            "bandwidth selection needs at least 3 points, got {m}"
        )));
    }
    let lo_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi_x - lo_x;
    if !(range > 0.0) {
        return Err(Error::Bandwidth(
            "covariates are all equal; no usable bandwidth exists".into(),
        ));
    }
    let lo = 2.0 * range / m as f64;
    let hi = range;
    let count = 12usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..count {
        let frac = k as f64 / (count - 1) as f64;
        let h = lo * (hi / lo).powf(frac);
        let mut total = 0.0;
        let mut ok = true;
        for i in 0..m {
            match local_weights_core(xs, Some(i), xs[i], h) {
                Ok(weights) => {
                    let pred = match combine_grids(responses, &weights) {
                        Ok(p) => p,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    };
                    total += squared_grid_distance(&pred, &responses[i]);
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && (best.is_none() || total < best.unwrap().1) {
            best = Some((h, total));
        }
    }
    best.map(|(h, _)| h).ok_or_else(|| {
        Error::Bandwidth("no candidate bandwidth produced valid windows everywhere".into())
    })
}

/// Mean integrated squared transport error of a curve of predictions against
/// ground-truth samples: entropic cost at each covariate, combined by the
/// trapezoid rule and normalized by the covariate range.
#[derive(Debug, Clone)]
pub struct MiseReport {
    pub mise: f64,
    pub per_covariate: Vec<f64>,
    pub epsilon: f64,
}

pub fn evaluate_mise(
    xs: &[f64],
    predicted: &[QuantileGrid],
    truth: &[PointCloud],
    params: SinkhornParams,
) -> Result<MiseReport> {
    if xs.len() != predicted.len() || xs.len() != truth.len() {
        return Err(Error::Data(format!(
            "mismatched lengths: {} covariates, {} predictions, {} truths",
            xs.len(),
            predicted.len(),
            truth.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Data("need at least 2 covariate values".into()));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain(
            "covariates must be strictly increasing".into(),
        ));
    }
    let outputs: Vec<_> = predicted
        .par_iter()
        .zip(truth.par_iter())
        .map(|(pred, cloud)| sinkhorn_cost(&pred.to_cloud(), cloud, params))
        .collect::<Result<_>>()?;
    let per_covariate: Vec<f64> = outputs.iter().map(|o| o.cost).collect();
    let range = xs[xs.len() - 1] - xs[0];
    let mut integral = 0.0;
    for k in 0..xs.len() - 1 {
        integral += (xs[k + 1] - xs[k]) * (per_covariate[k] + per_covariate[k + 1]) / 2.0;
    }
    Ok(MiseReport {
        mise: integral / range,
        per_covariate,
        epsilon: outputs[0].epsilon,
    })
}
