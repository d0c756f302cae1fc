use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

/// Smallest admissible eigenvalue when sampling covariance spectra; draws
/// below this are clamped so every covariance stays positive definite.
pub const EIGENVALUE_FLOOR: f64 = 1e-8;

/// Independent generator for substream `stream` of the given seed. Streams
/// never overlap, so per-distribution substreams stay reproducible no matter
/// how much any one of them is consumed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Ten Gaussian clusters spread evenly on a circle, plus an optional central
/// cluster; the classic pair for interpolation demos.
#[derive(Debug, Clone)]
pub struct RingPair {
    /// 10 ring clusters, 110 points each.
    pub left: PointCloud,
    /// The same 10 ring clusters plus a central one, 100 points each.
    pub right: PointCloud,
}

pub const RING_RADIUS: f64 = 4.0;
pub const RING_CLUSTER_STD: f64 = 0.35;
const RING_CLUSTERS: usize = 10;

fn ring_cluster(rng: &mut ChaCha8Rng, center: (f64, f64), count: usize, out: &mut Vec<f64>) {
    for _ in 0..count {
        out.push(center.0 + RING_CLUSTER_STD * normal(rng));
        out.push(center.1 + RING_CLUSTER_STD * normal(rng));
    }
}

pub fn gen_ring_pair(seed: u64) -> RingPair {
    let centers: Vec<(f64, f64)> = (0..RING_CLUSTERS)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / RING_CLUSTERS as f64;
            (RING_RADIUS * angle.cos(), RING_RADIUS * angle.sin())
        })
        .collect();
    let mut left = Vec::with_capacity(RING_CLUSTERS * 110 * 2);
    for (k, &c) in centers.iter().enumerate() {
        let mut rng = substream(seed, 1 + k as u64);
        ring_cluster(&mut rng, c, 110, &mut left);
    }
    let mut right = Vec::with_capacity((RING_CLUSTERS + 1) * 100 * 2);
    for (k, &c) in centers.iter().enumerate() {
        let mut rng = substream(seed, 101 + k as u64);
        ring_cluster(&mut rng, c, 100, &mut right);
    }
    let mut rng = substream(seed, 101 + RING_CLUSTERS as u64);
    ring_cluster(&mut rng, (0.0, 0.0), 100, &mut right);
    RingPair {
        left: PointCloud::from_flat(left, 2).unwrap(),
        right: PointCloud::from_flat(right, 2).unwrap(),
    }
}

/// Random nested-ellipse clouds: points sit on an outer and an inner ellipse
/// boundary with mild radial jitter, at a random center and orientation.
pub fn gen_nested_ellipses(seed: u64, count: usize, points_each: usize) -> Vec<PointCloud> {
    assert!(points_each >= 2, "need at least one point per boundary");
    (0..count)
        .map(|k| {
            let mut rng = substream(seed, 1 + k as u64);
            let cx = rng.gen_range(-1.0..1.0);
            let cy = rng.gen_range(-1.0..1.0);
            let a_outer = rng.gen_range(1.5..2.5);
            let b_outer = rng.gen_range(0.8..1.6);
            let ratio = rng.gen_range(0.45..0.6);
            let rot = rng.gen_range(0.0..PI);
            let (sin, cos) = rot.sin_cos();
            let outer = points_each - points_each / 2;
            let mut data = Vec::with_capacity(points_each * 2);
            for i in 0..points_each {
                let (a, b) = if i < outer {
                    (a_outer, b_outer)
                } else {
                    (a_outer * ratio, b_outer * ratio)
                };
                let theta = rng.gen_range(0.0..2.0 * PI);
                let scale = 1.0 + 0.01 * normal(&mut rng);
                let ex = scale * a * theta.cos();
                let ey = scale * b * theta.sin();
                data.push(cx + cos * ex - sin * ey);
                data.push(cy + sin * ex + cos * ey);
            }
            PointCloud::from_flat(data, 2).unwrap()
        })
        .collect()
}

/// Bivariate regression testbed: responses observed at 51 covariate values
/// (every other node of a 101-point uniform grid on [0, 1]) with the other
/// 50 held out, plus noise-free reference clouds at the held-out values.
#[derive(Debug, Clone)]
pub struct BivariateRegression {
    pub observed_xs: Vec<f64>,
    pub observed: Vec<PointCloud>,
    pub held_out_xs: Vec<f64>,
    /// Samples from the exact conditional law at each held-out covariate.
    pub truth: Vec<PointCloud>,
}

fn bivariate_mean(x: f64) -> [f64; 2] {
    [0.4 * x + 0.3, 0.4 * x + 0.3]
}

fn bivariate_lambda_mean(x: f64) -> [f64; 2] {
    [(1.0 + 0.5 * x) / 100.0, (1.0 - 0.5 * x) / 100.0]
}

fn bivariate_point(rng: &mut ChaCha8Rng, mean: [f64; 2], lambda: [f64; 2]) -> [f64; 2] {
    let half_sqrt2 = 0.5f64.sqrt();
    let w1 = lambda[0].sqrt() * normal(rng);
    let w2 = lambda[1].sqrt() * normal(rng);
    [
        mean[0] + half_sqrt2 * (w1 + w2),
        mean[1] + half_sqrt2 * (-w1 + w2),
    ]
}

/// Generates the bivariate testbed. Each response distribution draws its
/// eigenvalues first and its points afterwards from a dedicated substream, so
/// the first `n` points of a larger run reproduce a smaller run exactly.
pub fn gen_bivariate_regression(seed: u64, n: usize, truth_points: usize) -> BivariateRegression {
    let xs: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let observed_idx: Vec<usize> = (0..=100).step_by(2).collect();
    let held_out_idx: Vec<usize> = (1..100).step_by(2).collect();
    let mut observed = Vec::with_capacity(observed_idx.len());
    for (k, &ix) in observed_idx.iter().enumerate() {
        let x = xs[ix];
        let mut rng = substream(seed, 1 + k as u64);
        let lm = bivariate_lambda_mean(x);
        let lambda = [
            (lm[0] + 0.1 * normal(&mut rng) / 100.0).max(EIGENVALUE_FLOOR),
            (lm[1] + 0.1 * normal(&mut rng) / 100.0).max(EIGENVALUE_FLOOR),
        ];
        let mean = bivariate_mean(x);
        let mut data = Vec::with_capacity(n * 2);
        for _ in 0..n {
            data.extend(bivariate_point(&mut rng, mean, lambda));
        }
        observed.push(PointCloud::from_flat(data, 2).unwrap());
    }
    let mut truth = Vec::with_capacity(held_out_idx.len());
    for (j, &ix) in held_out_idx.iter().enumerate() {
        let x = xs[ix];
        let mut rng = substream(seed, 1000 + j as u64);
        let mean = bivariate_mean(x);
        let lambda = bivariate_lambda_mean(x);
        let mut data = Vec::with_capacity(truth_points * 2);
        for _ in 0..truth_points {
            data.extend(bivariate_point(&mut rng, mean, lambda));
        }
        truth.push(PointCloud::from_flat(data, 2).unwrap());
    }
    BivariateRegression {
        observed_xs: observed_idx.iter().map(|&ix| xs[ix]).collect(),
        observed,
        held_out_xs: held_out_idx.iter().map(|&ix| xs[ix]).collect(),
        truth,
    }
}

/// Mean/spectrum profiles for the synthetic scalability testbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalabilityDesign {
    /// Linear mean and spectrum profiles, matched to the global model.
    Global,
    /// Sinusoidal mean and cosine spectrum profiles for the local model.
    Local,
}

#[derive(Debug, Clone)]
pub struct ScalabilityData {
    pub xs: Vec<f64>,
    pub responses: Vec<PointCloud>,
}

fn gram_schmidt_orthonormal(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    // Columns of the result are an orthonormal basis obtained from a random
    // Gaussian matrix.
    let mut cols: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| normal(rng)).collect())
        .collect();
    for j in 0..p {
        for k in 0..j {
            let proj: f64 = (0..p).map(|i| cols[j][i] * cols[k][i]).sum();
            for i in 0..p {
                cols[j][i] -= proj * cols[k][i];
            }
        }
        let norm: f64 = (0..p).map(|i| cols[j][i] * cols[j][i]).sum::<f64>().sqrt();
        for i in 0..p {
            cols[j][i] /= norm;
        }
    }
    let mut v = vec![0.0f64; p * p];
    for j in 0..p {
        for i in 0..p {
            v[i * p + j] = cols[j][i];
        }
    }
    v
}

/// Synthetic distribution-on-scalar data with a shared random covariance
/// frame: covariates uniform on [-1/2, 1/2], per-response mean and spectrum
/// jittered around smooth profiles of the covariate.
pub fn gen_scalability(
    seed: u64,
    design: ScalabilityDesign,
    p: usize,
    m: usize,
    n: usize,
) -> ScalabilityData {
    assert!(p >= 1 && m >= 1 && n >= 1);
    let mut root = substream(seed, 0);
    let xs: Vec<f64> = (0..m).map(|_| root.gen_range(-0.5..0.5)).collect();
    let v = gram_schmidt_orthonormal(&mut root, p);
    let responses: Vec<PointCloud> = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let mut rng = substream(seed, 1 + k as u64);
            let (alpha, beta): (f64, f64) = match design {
                ScalabilityDesign::Global => (x, x + 1.0),
                ScalabilityDesign::Local => {
                    (0.5 * (2.0 * PI * x).sin(), (0.9 * PI * x).cos())
                }
            };
            let mean: Vec<f64> = (0..p).map(|_| alpha + 0.1 * normal(&mut rng)).collect();
            let scale: Vec<f64> = (0..p)
                .map(|_| (beta + 0.1 * normal(&mut rng)).max(EIGENVALUE_FLOOR).sqrt())
                .collect();
            let mut data = Vec::with_capacity(n * p);
            let mut w = vec![0.0f64; p];
            for _ in 0..n {
                for (slot, s) in w.iter_mut().zip(&scale) {
                    *slot = s * normal(&mut rng);
                }
                for i in 0..p {
                    let mut y = mean[i];
                    for (j, wj) in w.iter().enumerate() {
                        y += v[i * p + j] * wj;
                    }
                    data.push(y);
                }
            }
            PointCloud::from_flat(data, p).unwrap()
        })
        .collect();
    ScalabilityData { xs, responses }
}

/// Point clouds loaded from a long-format CSV: rows are grouped by the value
/// of `key_column` (in first-appearance order) and the selected numeric
/// columns become coordinates. Optional standardization recenters and
/// rescales each coordinate using pooled statistics across every row.
#[derive(Debug, Clone)]
pub struct GroupedClouds {
    pub keys: Vec<String>,
    pub clouds: Vec<PointCloud>,
    pub standardized: bool,
    /// Pooled per-coordinate means applied when standardizing (zeros otherwise).
    pub centers: Vec<f64>,
    /// Pooled per-coordinate deviations applied when standardizing (ones otherwise).
    pub scales: Vec<f64>,
}

pub fn load_indicator_csv(
    path: &Path,
    key_column: &str,
    indicator_columns: &[String],
    standardize: bool,
) -> Result<GroupedClouds> {
    if indicator_columns.is_empty() {
        return Err(Error::Config("need at least one indicator column".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("cannot open CSV: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("bad CSV header: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column '{name}' not found in CSV header")))
    };
    let key_ix = find(key_column)?;
    let value_ix: Vec<usize> = indicator_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;
    let dim = value_ix.len();
    let mut keys: Vec<String> = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (row_num, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("bad CSV record: {e}")))?;
        let key = record
            .get(key_ix)
            .ok_or_else(|| Error::Parse(format!("row {}: missing key field", row_num + 2)))?
            .to_string();
        let slot = *by_key.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            groups.push(Vec::new());
            groups.len() - 1
        });
        for (&ix, name) in value_ix.iter().zip(indicator_columns) {
            let field = record.get(ix).unwrap_or("");
            if field.is_empty() {
                return Err(Error::Parse(format!(
                    "row {}: empty value in column '{name}'",
                    row_num + 2
                )));
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}: '{field}' in column '{name}' is not a number",
                    row_num + 2
                ))
            })?;
            groups[slot].push(value);
        }
    }
    if groups.is_empty() {
        return Err(Error::Data("CSV contains no data rows".into()));
    }
    let mut centers = vec![0.0f64; dim];
    let mut scales = vec![1.0f64; dim];
    if standardize {
        let total_rows: usize = groups.iter().map(|g| g.len() / dim).sum();
        for a in 0..dim {
            let mut mean = 0.0;
            for g in &groups {
                for row in g.chunks_exact(dim) {
                    mean += row[a];
                }
            }
            mean /= total_rows as f64;
            let mut var = 0.0;
            for g in &groups {
                for row in g.chunks_exact(dim) {
                    var += (row[a] - mean) * (row[a] - mean);
                }
            }
            var /= total_rows as f64;
            if !(var > 0.0) {
                return Err(Error::Data(format!(
                    "column '{}' is constant; cannot standardize",
                    indicator_columns[a]
                )));
            }
            centers[a] = mean;
            scales[a] = var.sqrt();
        }
        for g in &mut groups {
            for row in g.chunks_exact_mut(dim) {
                for a in 0..dim {
                    row[a] = (row[a] - centers[a]) / scales[a];
                }
            }
        }
    }
    let clouds = groups
        .into_iter()
        .map(|g| PointCloud::from_flat(g, dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupedClouds {
        keys,
        clouds,
        standardized: standardize,
        centers,
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = substream(7, 3);
            (0..4).map(|_| r.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut r = substream(7, 3);
            (0..4).map(|_| r.gen()).collect()
        };
        let c: Vec<u64> = {
            let mut r = substream(7, 4);
            (0..4).map(|_| r.gen()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ring_pair_has_expected_shape() {
        let pair = gen_ring_pair(11);
        assert_eq!(pair.left.len(), 1100);
        assert_eq!(pair.right.len(), 1100);
        assert_eq!(pair.left.dim(), 2);
        // Every left point sits near the circle of radius 4.
        for p in pair.left.iter() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - RING_RADIUS).abs() < 2.0, "radius {r}");
        }
        // The right cloud has mass near the origin, the left does not.
        let near_origin = |cloud: &PointCloud| {
            cloud
                .iter()
                .filter(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() < 2.0)
                .count()
        };
        assert_eq!(near_origin(&pair.left), 0);
        assert!(near_origin(&pair.right) >= 90);
    }

    #[test]
    fn ellipses_have_expected_shape_and_determinism() {
        let clouds = gen_nested_ellipses(5, 30, 1000);
        assert_eq!(clouds.len(), 30);
        for c in &clouds {
            assert_eq!(c.len(), 1000);
            assert_eq!(c.dim(), 2);
        }
        let again = gen_nested_ellipses(5, 30, 1000);
        assert_eq!(clouds[7].as_flat(), again[7].as_flat());
        let other = gen_nested_ellipses(6, 30, 1000);
        assert_ne!(clouds[7].as_flat(), other[7].as_flat());
    }

    #[test]
    fn bivariate_sample_prefix_is_nested_across_sizes() {
        let small = gen_bivariate_regression(3, 50, 10);
        let large = gen_bivariate_regression(3, 400, 10);
        assert_eq!(small.observed.len(), 51);
        assert_eq!(small.held_out_xs.len(), 50);
        for k in [0usize, 17, 50] {
            let a = small.observed[k].as_flat();
            let b = &large.observed[k].as_flat()[..a.len()];
            assert_eq!(a, b, "response {k} is not a prefix");
        }
    }

    #[test]
    fn bivariate_means_track_the_linear_profile() {
        let data = gen_bivariate_regression(9, 4000, 10);
        for (x, cloud) in data.observed_xs.iter().zip(&data.observed) {
            let mean = cloud.mean();
            let expect = 0.4 * x + 0.3;
            // Point noise has sd about 0.1, so 4000 draws pin the mean to
            // roughly 0.0016; allow generous slack.
            assert!((mean[0] - expect).abs() < 0.02, "x {x}: {} vs {expect}", mean[0]);
            assert!((mean[1] - expect).abs() < 0.02);
        }
        assert_eq!(data.truth.len(), 50);
        assert_eq!(data.truth[0].len(), 10);
    }

    #[test]
    fn scalability_frame_is_orthonormal_and_data_reproducible() {
        let mut rng = substream(1, 0);
        for p in [2usize, 5] {
            let v = gram_schmidt_orthonormal(&mut rng, p);
            for a in 0..p {
                for b in 0..p {
                    let dot: f64 = (0..p).map(|i| v[i * p + a] * v[i * p + b]).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
        let d1 = gen_scalability(2, ScalabilityDesign::Global, 2, 5, 100);
        let d2 = gen_scalability(2, ScalabilityDesign::Global, 2, 5, 100);
        assert_eq!(d1.xs, d2.xs);
        assert_eq!(d1.responses[3].as_flat(), d2.responses[3].as_flat());
        assert!(d1.xs.iter().all(|x| (-0.5..0.5).contains(x)));
        let local = gen_scalability(2, ScalabilityDesign::Local, 5, 4, 50);
        assert_eq!(local.responses[0].dim(), 5);
    }

    #[test]
    fn indicator_csv_groups_and_standardizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "region,year,gdp,life").unwrap();
        writeln!(f, "a,2000,1.0,70").unwrap();
        writeln!(f, "b,2000,2.0,72").unwrap();
        writeln!(f, "a,2001,3.0,71").unwrap();
        writeln!(f, "b,2001,4.0,73").unwrap();
        drop(f);
        let cols = vec!["gdp".to_string(), "life".to_string()];
        let plain = load_indicator_csv(&path, "region", &cols, false).unwrap();
        assert_eq!(plain.keys, vec!["a", "b"]);
        assert_eq!(plain.clouds[0].as_flat(), &[1.0, 70.0, 3.0, 71.0]);
        assert!(!plain.standardized);
        let std = load_indicator_csv(&path, "region", &cols, true).unwrap();
        assert!(std.standardized);
        let pooled: Vec<f64> = std
            .clouds
            .iter()
            .flat_map(|c| c.as_flat().iter().copied())
            .collect();
        let mean_gdp: f64 = pooled.chunks_exact(2).map(|r| r[0]).sum::<f64>() / 4.0;
        assert!(mean_gdp.abs() < 1e-12);
        assert!(load_indicator_csv(&path, "missing", &cols, false).is_err());
        let bad_cols = vec!["year".to_string(), "nope".to_string()];
        assert!(load_indicator_csv(&path, "region", &bad_cols, false).is_err());
    }

    #[test]
    fn indicator_csv_rejects_bad_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "key,v").unwrap();
        writeln!(f, "a,oops").unwrap();
        drop(f);
        let cols = vec!["v".to_string()];
        match load_indicator_csv(&path, "key", &cols, false) {
            Err(Error::Parse(msg)) => assert!(msg.contains("oops")),
            other => panic!("expected parse error, got {other:?}"),
        }
        let path2 = dir.path().join("empty.csv");
        let mut f = std::fs::File::create(&path2).unwrap();
        writeln!(f, "key,v").unwrap();
        writeln!(f, "a,").unwrap();
        drop(f);
        assert!(load_indicator_csv(&path2, "key", &cols, false).is_err());
    }
}
