use crate::error::{Error, Result};
use crate::quantile::QuantileGrid;
use crate::tree::MassTree;

fn validate_weights(weights: &[f64], count: usize) -> Result<f64> {
    if weights.len() != count {
        return Err(Error::Domain(format!(
            "got {} weights for {count} inputs",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Weight("weights must be finite".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Weight(format!(
            "weight sum {total} must be strictly positive"
        )));
    }
    Ok(total)
}

/// Weighted combination of already-sampled quantile grids:
/// `(sum_i w_i Q_i(t_g)) / (sum_i w_i)` at every grid node. All grids must
/// share dimension and resolution. Individual weights may be negative; only
/// the total has to stay positive.
pub fn combine_grids(grids: &[QuantileGrid], weights: &[f64]) -> Result<QuantileGrid> {
    if grids.is_empty() {
        return Err(Error::Domain("need at least one grid".into()));
    }
    let total = validate_weights(weights, grids.len())?;
    let dim = grids[0].dim();
    let g = grids[0].grid();
    for (k, q) in grids.iter().enumerate() {
        if q.dim() != dim || q.grid() != g {
            return Err(Error::Domain(format!(
                "grid {k} has shape ({}, {}), expected ({g}, {dim})",
                q.grid(),
                q.dim()
            )));
        }
    }
    let mut acc = vec![0.0f64; g * dim];
    for (q, &w) in grids.iter().zip(weights) {
        for (slot, &v) in acc.iter_mut().zip(q.as_flat()) {
            *slot += w * v;
        }
    }
    for slot in &mut acc {
        *slot /= total;
    }
    QuantileGrid::from_values(acc, dim)
}

/// Closed-form barycenter of the distributions represented by `trees` under
/// the given weights: each tree's quantile map is sampled on a common grid
/// and averaged nodewise. `grid = None` uses `2^max_depth` nodes so no tree
/// is sampled below its native resolution. Single pass, no iteration.
pub fn barycenter(trees: &[MassTree], weights: &[f64], grid: Option<usize>) -> Result<QuantileGrid> {
    if trees.is_empty() {
        return Err(Error::Domain("need at least one input distribution".into()));
    }
    let dim = trees[0].dim();
    for (k, t) in trees.iter().enumerate() {
        if t.dim() != dim {
            return Err(Error::Domain(format!(
                "tree {k} has dimension {}, expected {dim}",
                t.dim()
            )));
        }
    }
    let g = match grid {
        Some(g) if g >= 1 => g,
        Some(g) => {
            return Err(Error::Config(format!("grid size {g} must be at least 1")));
        }
        None => {
            let max_depth = trees.iter().map(|t| t.depth()).max().unwrap();
            1usize << max_depth
        }
    };
    let grids: Vec<QuantileGrid> = trees
        .iter()
        .map(|t| t.sample_grid(g))
        .collect::<Result<_>>()?;
    combine_grids(&grids, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;

    fn tree_of(rows: &[Vec<f64>], depth: usize) -> MassTree {
        MassTree::fit(&PointCloud::from_rows(rows).unwrap(), Some(depth)).unwrap()
    }

    #[test]
    fn one_hot_weights_reproduce_the_selected_input() {
        let a = tree_of(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]], 2);
        let b = tree_of(&[vec![10.0], vec![20.0], vec![30.0], vec![40.0]], 2);
        let picked = barycenter(&[a.clone(), b], &[0.0, 1.0], None).unwrap();
        let direct = tree_of(&[vec![10.0], vec![20.0], vec![30.0], vec![40.0]], 2)
            .sample_grid(4)
            .unwrap();
        assert_eq!(picked.as_flat(), direct.as_flat());
    }

    #[test]
    fn weight_scaling_leaves_the_result_unchanged() {
        let a = tree_of(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 1.0], vec![2.0, 4.0]], 2);
        let b = tree_of(&[vec![5.0, 1.0], vec![6.0, 3.0], vec![4.0, 2.0], vec![7.0, 0.0]], 2);
        let trees = [a, b];
        let base = barycenter(&trees, &[0.3, 0.7], None).unwrap();
        let scaled = barycenter(&trees, &[0.3 * 3.7, 0.7 * 3.7], None).unwrap();
        for (x, y) in base.as_flat().iter().zip(scaled.as_flat()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn midpoint_of_a_shifted_copy_is_the_half_shift() {
        let rows: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64]).collect();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + 10.0]).collect();
        let a = tree_of(&rows, 3);
        let b = tree_of(&shifted, 3);
        let mid = barycenter(&[a.clone(), b], &[0.5, 0.5], None).unwrap();
        let base = a.sample_grid(8).unwrap();
        for g in 0..8 {
            assert_eq!(mid.value(g)[0], base.value(g)[0] + 5.0);
        }
    }

    #[test]
    fn heterogeneous_depths_use_the_finest_default_grid() {
        let a = tree_of(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], 2);
        let b = tree_of(&(0..8).map(|k| vec![k as f64]).collect::<Vec<_>>(), 3);
        let out = barycenter(&[a, b], &[0.5, 0.5], None).unwrap();
        assert_eq!(out.grid(), 8);
    }

    #[test]
    fn rejects_bad_weights_and_shapes() {
        let a = tree_of(&[vec![0.0], vec![1.0]], 1);
        let b = tree_of(&[vec![0.0, 0.0], vec![1.0, 1.0]], 1);
        let single = [a.clone()];
        assert!(barycenter(&single, &[1.0, 2.0], None).is_err());
        assert!(barycenter(&single, &[-1.0], None).is_err());
        assert!(barycenter(&single, &[f64::NAN], None).is_err());
        assert!(barycenter(&[a.clone(), a.clone()], &[1.0, -1.0], None).is_err());
        assert!(barycenter(&[a, b], &[0.5, 0.5], None).is_err());
        assert!(barycenter(&[], &[], None).is_err());
    }

    #[test]
    fn negative_weight_extrapolation_stays_on_the_affine_line() {
        let rows: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64]).collect();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + 4.0]).collect();
        let a = tree_of(&rows, 3);
        let b = tree_of(&shifted, 3);
        let base = a.sample_grid(8).unwrap();
        // Weights (1.5, -0.5) extrapolate past a by half the a-to-b step.
        let out = barycenter(&[a, b], &[1.5, -0.5], None).unwrap();
        for g in 0..8 {
            assert!((out.value(g)[0] - (base.value(g)[0] - 2.0)).abs() <= 1e-9);
        }
    }
}
