use crate::error::{Error, Result};

/// A finite point set in `R^d`, stored row-major.
///
/// All coordinates are validated to be finite at construction; downstream code
/// relies on this (ordering comparisons never see NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    len: usize,
    dim: usize,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer of `len * dim` coordinates.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("point dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::Data("point cloud must contain at least one point".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::Data(format!(
                "flat buffer of {} coordinates is not a multiple of dimension {}",
                data.len(),
                dim
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite coordinate at point {}, axis {}",
                bad / dim,
                bad % dim
            )));
        }
        let len = data.len() / dim;
        Ok(Self { data, len, dim })
    }

    /// Builds a cloud from one row per point.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("rows have inconsistent dimensions".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self::from_flat(data, dim)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coord(&self, i: usize, axis: usize) -> f64 {
        self.data[i * self.dim + axis]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Tight axis-aligned bounding box, one `(lo, hi)` pair per axis.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut boxes = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.iter() {
            for (axis, &v) in p.iter().enumerate() {
                let b = &mut boxes[axis];
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        boxes
    }

    /// Coordinate-wise mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.iter() {
            for (axis, &v) in p.iter().enumerate() {
                m[axis] += v;
            }
        }
        for v in &mut m {
            *v /= self.len as f64;
        }
        m
    }

    /// Applies `x -> a ⊙ x + b` componentwise, returning a new cloud.
    pub fn affine_image(&self, scale: &[f64], shift: &[f64]) -> Result<Self> {
        if scale.len() != self.dim || shift.len() != self.dim {
            return Err(Error::Data(format!(
                "affine map dimension {} does not match cloud dimension {}",
                scale.len(),
                self.dim
            )));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.iter() {
            for axis in 0..self.dim {
                data.push(scale[axis] * p[axis] + shift[axis]);
            }
        }
        Self::from_flat(data, self.dim)
    }
}
