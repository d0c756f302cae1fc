//! Mass-aligned Hilbert quantile trees for multivariate distributions.
//!
//! The crate parameterizes an empirical measure on `R^d` by a single scalar
//! `t in [0, 1]`: a balanced binary tree of conditional median cuts, visited
//! in Hilbert-curve order, turns each measure into a quantile map
//! `Q: [0, 1] -> R^d`. Distances, barycenters, and Fréchet regression then
//! reduce to ordinary `L^2` operations on these maps:
//!
//! - [`tree`] builds the median tree over a [`cloud::PointCloud`];
//! - [`quantile`] evaluates maps, samples them on dyadic grids, and computes
//!   the `L^2` map distance;
//! - [`barycenter`] combines maps linearly under (possibly negative) affine
//!   weights in closed form;
//! - [`frechet`] computes global and local regression weights for
//!   distribution-valued responses and evaluates predictions;
//! - [`ot`] provides exact small-scale optimal-transport references
//!   (assignment-based and sorted one-dimensional Wasserstein-2, log-domain
//!   Sinkhorn) used for validation and reporting;
//! - [`datagen`] generates the synthetic benchmark families and reads
//!   grouped indicator CSVs.

pub mod barycenter;
pub mod cloud;
pub mod datagen;
pub mod error;
pub mod frechet;
pub mod hilbert;
pub mod io;
pub mod ot;
pub mod quantile;
pub mod tree;

pub use cloud::PointCloud;
pub use error::{Error, Result};

/// Library version, embedded in serialized artifacts and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
