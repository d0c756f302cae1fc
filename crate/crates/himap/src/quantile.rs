use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::tree::MassTree;

/// A quantile map sampled at the `G` dyadic midpoints `t_g = (g + 1/2) / G`,
/// stored row-major (`G` rows of `dim` coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    dim: usize,
    values: Vec<f64>,
}

impl QuantileGrid {
    pub fn from_values(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("grid dimension must be at least 1".into()));
        }
        if values.is_empty() || values.len() % dim != 0 {
            return Err(Error::Data(format!(
                "grid buffer of {} values is not a nonempty multiple of dimension {}",
                values.len(),
                dim
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn grid(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, g: usize) -> &[f64] {
        &self.values[g * self.dim..(g + 1) * self.dim]
    }

    /// Grid midpoint in `[0, 1]` backing row `g`.
    pub fn t_of(&self, g: usize) -> f64 {
        (g as f64 + 0.5) / self.grid() as f64
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// The grid viewed as a point cloud of `G` equally weighted atoms.
    pub fn to_cloud(&self) -> PointCloud {
        PointCloud::from_flat(self.values.clone(), self.dim)
            .expect("grid values are finite by construction")
    }
}

impl MassTree {
    /// Grid size matching the tree's own resolution, `2^depth`.
    pub fn default_grid(&self) -> usize {
        1usize << self.depth()
    }

    /// Samples the quantile map at the `grid` dyadic midpoints.
    pub fn sample_grid(&self, grid: usize) -> Result<QuantileGrid> {
        if grid == 0 {
            return Err(Error::Config("grid size must be at least 1".into()));
        }
        let mut values = Vec::with_capacity(grid * self.dim());
        for g in 0..grid {
            let t = (g as f64 + 0.5) / grid as f64;
            values.extend(self.evaluate(t)?);
        }
        QuantileGrid::from_values(values, self.dim())
    }

    /// Pushforward of the uniform grid through the quantile map: `grid`
    /// equally weighted atoms approximating the fitted measure.
    pub fn pushforward(&self, grid: usize) -> Result<PointCloud> {
        Ok(self.sample_grid(grid)?.to_cloud())
    }
}

fn validate_order(r: f64) -> Result<()> {
    if !r.is_finite() || r < 1.0 {
        return Err(Error::Domain(format!("distance order r = {r} must be >= 1")));
    }
    Ok(())
}

/// `L^r` distance between two sampled maps on a shared grid.
pub fn grid_distance(a: &QuantileGrid, b: &QuantileGrid, r: f64) -> Result<f64> {
    validate_order(r)?;
    if a.dim() != b.dim() {
        return Err(Error::Domain(format!(
            "grids have different dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.grid() != b.grid() {
        return Err(Error::Domain(format!(
            "grids have different sizes {} and {}",
            a.grid(),
            b.grid()
        )));
    }
    let dim = a.dim();
    let mut acc = 0.0;
    for (pa, pb) in a.rows().zip(b.rows()) {
        let mut sq = 0.0;
        for axis in 0..dim {
            let diff = pa[axis] - pb[axis];
            sq += diff * diff;
        }
        acc += if r == 2.0 { sq } else { sq.sqrt().powf(r) };
    }
    let mean = acc / a.grid() as f64;
    Ok(if r == 2.0 { mean.sqrt() } else { mean.powf(1.0 / r) })
}

/// Map-space distance of order `r` between two fitted trees:
/// `( mean_g ||Q_a(t_g) - Q_b(t_g)||^r )^(1/r)` over a shared dyadic grid.
///
/// The default grid is `2^max(depth_a, depth_b)`, the coarsest grid that
/// resolves both maps exactly; pass `grid` to override.
pub fn himap_distance(a: &MassTree, b: &MassTree, r: f64, grid: Option<usize>) -> Result<f64> {
    validate_order(r)?;
    if a.dim() != b.dim() {
        return Err(Error::Domain(format!(
            "trees have different dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let g = match grid {
        Some(0) => return Err(Error::Config("grid size must be at least 1".into())),
        Some(g) => g,
        None => 1usize << a.depth().max(b.depth()),
    };
    let dim = a.dim();
    let mut acc = 0.0;
    for idx in 0..g {
        let t = (idx as f64 + 0.5) / g as f64;
        let (pa, pb) = (a.evaluate(t)?, b.evaluate(t)?);
        let mut sq = 0.0;
        for axis in 0..dim {
            let diff = pa[axis] - pb[axis];
            sq += diff * diff;
        }
        acc += if r == 2.0 { sq } else { sq.sqrt().powf(r) };
    }
    let mean = acc / g as f64;
    Ok(if r == 2.0 { mean.sqrt() } else { mean.powf(1.0 / r) })
}
