use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::hilbert::{address_of, CellAddress, CurveCursor};

/// Hard cap on tree depth; `2^30` cells already exceed any sample size the
/// exact construction is meant for.
pub const MAX_TREE_DEPTH: usize = 30;

/// Default depth for a sample of `n` points: `max(1, floor(log2 n))`, capped
/// at [`MAX_TREE_DEPTH`]. At this depth every cell still holds at least one
/// point, so no branch stops early.
pub fn default_depth(n: usize) -> usize {
    debug_assert!(n >= 1);
    let floor_log2 = (usize::BITS - 1 - n.leading_zeros()) as usize;
    floor_log2.clamp(1, MAX_TREE_DEPTH)
}

/// One node of a mass tree.
///
/// Internal nodes carry the split (`axis`, `cut`); every node carries the
/// curve state needed to continue the traversal below it and the box it
/// covers. A leaf closed before full depth keeps its single point so
/// evaluation below it can report exact coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub depth: u32,
    pub size: u32,
    #[serde(skip, default)]
    start: u32,
    pub axis: Option<u8>,
    pub cut: Option<f64>,
    pub state: CurveCursor,
    pub children: Option<[u32; 2]>,
    pub point: Option<Vec<f64>>,
    pub bbox: Vec<(f64, f64)>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Balanced binary tree of conditional median cuts in Hilbert order.
///
/// Every internal node splits its points into a low-`t` and a high-`t` half
/// whose sizes differ by at most one; the split axis follows the cyclic
/// Hilbert schedule and the split direction follows the curve orientation.
/// Child 0 always holds the low-`t` half.
#[derive(Debug, Clone)]
pub struct MassTree {
    dim: usize,
    depth: usize,
    len: usize,
    root_box: Vec<(f64, f64)>,
    nodes: Vec<TreeNode>,
    // Original point indices permuted so each node's set is one contiguous
    // range; present only on trees fitted in-process (not serialized).
    order: Option<Vec<u32>>,
}

struct Builder<'a> {
    points: &'a PointCloud,
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

impl<'a> Builder<'a> {
    fn build(
        &mut self,
        order: &mut [u32],
        offset: u32,
        cursor: CurveCursor,
        depth: usize,
        bbox: Vec<(f64, f64)>,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        let size = order.len() as u32;
        if order.len() < 2 || depth == self.max_depth {
            let early = order.len() == 1 && depth < self.max_depth;
            self.nodes.push(TreeNode {
                depth: depth as u32,
                size,
                start: offset,
                axis: None,
                cut: None,
                state: cursor,
                children: None,
                point: early.then(|| self.points.point(order[0] as usize).to_vec()),
                bbox,
            });
            return id;
        }
        let (axis, reversed) = cursor.split_plan();
        let low = (order.len() + 1) / 2;
        // Total order: coordinate along the split direction, ties broken by
        // original index, so tied points fill the low side smallest-index
        // first. The element ending at position low-1 is the lower median in
        // the direction-normalized scale.
        let points = self.points;
        order.select_nth_unstable_by(low - 1, |&i, &j| {
            let (a, b) = (
                points.coord(i as usize, axis),
                points.coord(j as usize, axis),
            );
            let ord = if reversed {
                b.partial_cmp(&a).unwrap()
            } else {
                a.partial_cmp(&b).unwrap()
            };
            ord.then(i.cmp(&j))
        });
        let cut = points.coord(order[low - 1] as usize, axis);
        let mut low_box = bbox.clone();
        let mut high_box = bbox.clone();
        if reversed {
            low_box[axis].0 = cut;
            high_box[axis].1 = cut;
        } else {
            low_box[axis].1 = cut;
            high_box[axis].0 = cut;
        }
        self.nodes.push(TreeNode {
            depth: depth as u32,
            size,
            start: offset,
            axis: Some(axis as u8),
            cut: Some(cut),
            state: cursor.clone(),
            children: None,
            point: None,
            bbox,
        });
        let (lo, hi) = order.split_at_mut(low);
        let a = self.build(lo, offset, cursor.descend(false), depth + 1, low_box);
        let b = self.build(
            hi,
            offset + low as u32,
            cursor.descend(true),
            depth + 1,
            high_box,
        );
        self.nodes[id as usize].children = Some([a, b]);
        id
    }
}

impl MassTree {
    /// Fits a tree of the given depth (default [`default_depth`]) over the
    /// cloud. Construction is deterministic: the same cloud always produces
    /// the identical tree.
    pub fn fit(points: &PointCloud, depth: Option<usize>) -> Result<Self> {
        let n = points.len();
        if n > u32::MAX as usize {
            return Err(Error::Resource(format!(
                "cloud of {n} points exceeds the supported maximum"
            )));
        }
        let depth = match depth {
            Some(l) => {
                if l < 1 || l > MAX_TREE_DEPTH {
                    return Err(Error::Config(format!(
                        "tree depth {l} outside valid range 1..={MAX_TREE_DEPTH}"
                    )));
                }
                l
            }
            None => default_depth(n),
        };
        let root_box = points.bounding_box();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut builder = Builder {
            points,
            max_depth: depth,
            nodes: Vec::new(),
        };
        builder.build(
            &mut order,
            0,
            CurveCursor::new(points.dim()),
            0,
            root_box.clone(),
        );
        Ok(Self {
            dim: points.dim(),
            depth,
            len: n,
            root_box,
            nodes: builder.nodes,
            order: Some(order),
        })
    }

    pub(crate) fn from_parts(
        dim: usize,
        depth: usize,
        len: usize,
        root_box: Vec<(f64, f64)>,
        nodes: Vec<TreeNode>,
    ) -> Self {
        Self {
            dim,
            depth,
            len,
            root_box,
            nodes,
            order: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Maximum depth the tree was fitted with.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of points the tree was fitted on.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Tight bounding box of the fitted cloud.
    pub fn root_box(&self) -> &[(f64, f64)] {
        &self.root_box
    }

    /// All nodes in preorder; index 0 is the root, child 0 the low-`t` half.
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Original point indices owned by `node`, available on trees fitted
    /// in-process (`None` after deserialization).
    pub fn node_indices(&self, node: &TreeNode) -> Option<&[u32]> {
        self.order
            .as_ref()
            .map(|o| &o[node.start as usize..(node.start + node.size) as usize])
    }

    /// Deepest node on the path of `addr`: the node at that address, or the
    /// leaf the path ends in if the address goes deeper.
    pub fn node_at(&self, addr: &CellAddress) -> &TreeNode {
        let mut node = &self.nodes[0];
        while (node.depth as usize) < addr.depth() {
            match node.children {
                Some([lo, hi]) => {
                    let bit = addr.bit(node.depth as usize);
                    node = &self.nodes[if bit { hi } else { lo } as usize];
                }
                None => break,
            }
        }
        node
    }

    /// Quantile map at `t`: the most recent cut per coordinate along `t`'s
    /// path. Coordinates never cut on that path report the root box midpoint;
    /// a branch that closed early on a single point reports that point.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let addr = address_of(t, self.depth)?;
        Ok(self.evaluate_address(&addr))
    }

    /// Same as [`evaluate`](Self::evaluate) for a precomputed address.
    pub fn evaluate_address(&self, addr: &CellAddress) -> Vec<f64> {
        let mut out: Vec<f64> = self.root_box.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let mut node = &self.nodes[0];
        while (node.depth as usize) < addr.depth() {
            match (node.children, node.axis, node.cut) {
                (Some([lo, hi]), Some(axis), Some(cut)) => {
                    out[axis as usize] = cut;
                    let bit = addr.bit(node.depth as usize);
                    node = &self.nodes[if bit { hi } else { lo } as usize];
                }
                _ => break,
            }
        }
        if (node.depth as usize) < addr.depth() {
            if let Some(p) = &node.point {
                return p.clone();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud_1d(values: &[f64]) -> PointCloud {
        PointCloud::from_flat(values.to_vec(), 1).unwrap()
    }

    // Node index sets are unordered ranges; sort before comparing.
    fn indices(tree: &MassTree, node: &TreeNode) -> Vec<u32> {
        let mut v = tree.node_indices(node).unwrap().to_vec();
        v.sort_unstable();
        v
    }

    #[test]
    fn default_depth_formula() {
        assert_eq!(default_depth(1), 1);
        assert_eq!(default_depth(2), 1);
        assert_eq!(default_depth(3), 1);
        assert_eq!(default_depth(4), 2);
        assert_eq!(default_depth(1000), 9);
        assert_eq!(default_depth(1 << 20), 20);
        assert_eq!(default_depth(usize::MAX), MAX_TREE_DEPTH);
    }

    #[test]
    fn four_point_line() {
        let tree = MassTree::fit(&cloud_1d(&[1.0, 2.0, 3.0, 4.0]), Some(2)).unwrap();
        let root = tree.root();
        assert_eq!(root.size, 4);
        assert_eq!(root.axis, Some(0));
        assert_eq!(root.cut, Some(2.0));
        let [lo, hi] = root.children.unwrap();
        let (lo, hi) = (&tree.nodes()[lo as usize], &tree.nodes()[hi as usize]);
        assert_eq!((lo.size, hi.size), (2, 2));
        assert_eq!(lo.cut, Some(1.0));
        assert_eq!(hi.cut, Some(3.0));
        assert_eq!(indices(&tree, lo), vec![0, 1]);
        assert_eq!(indices(&tree, hi), vec![2, 3]);
        assert_eq!(lo.bbox, vec![(1.0, 2.0)]);
        assert_eq!(hi.bbox, vec![(2.0, 4.0)]);
        // Depth-2 leaves carry no early point.
        for id in lo.children.unwrap() {
            let leaf = &tree.nodes()[id as usize];
            assert!(leaf.is_leaf());
            assert_eq!(leaf.size, 1);
            assert!(leaf.point.is_none());
        }
    }

    #[test]
    fn tied_points_split_by_index() {
        let tree = MassTree::fit(&cloud_1d(&[7.0, 7.0, 7.0, 7.0]), Some(1)).unwrap();
        let root = tree.root();
        assert_eq!(root.cut, Some(7.0));
        let [lo, hi] = root.children.unwrap();
        assert_eq!(indices(&tree, &tree.nodes()[lo as usize]), vec![0, 1]);
        assert_eq!(indices(&tree, &tree.nodes()[hi as usize]), vec![2, 3]);
    }

    #[test]
    fn reversed_split_takes_upper_half() {
        // Quadrant digit 1 of the root block: the second split inside the
        // high-x half runs top-down, so its low-t child is the upper-y side
        // and the geometric cut is the upper median.
        let points = PointCloud::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let tree = MassTree::fit(&points, Some(2)).unwrap();
        let root = tree.root();
        assert_eq!(root.axis, Some(0));
        assert_eq!(root.cut, Some(0.0));
        let hi = &tree.nodes()[root.children.unwrap()[1] as usize];
        assert_eq!(indices(&tree, hi), vec![2, 3]);
        assert_eq!(hi.axis, Some(1));
        assert_eq!(hi.cut, Some(1.0));
        let [hlo, hhi] = hi.children.unwrap();
        // Low-t grandchild holds the top point (1,1); boxes flip accordingly.
        assert_eq!(indices(&tree, &tree.nodes()[hlo as usize]), vec![3]);
        assert_eq!(indices(&tree, &tree.nodes()[hhi as usize]), vec![2]);
        assert_eq!(tree.nodes()[hlo as usize].bbox[1], (1.0, 1.0));
        assert_eq!(tree.nodes()[hhi as usize].bbox[1], (0.0, 1.0));
    }

    #[test]
    fn sizes_stay_balanced_without_early_stops() {
        let values: Vec<f64> = (0..37).map(|i| (i * 13 % 37) as f64).collect();
        let tree = MassTree::fit(&cloud_1d(&values), Some(5)).unwrap();
        for node in tree.nodes() {
            if let Some([lo, hi]) = node.children {
                let (a, b) = (tree.nodes()[lo as usize].size, tree.nodes()[hi as usize].size);
                assert_eq!(a + b, node.size);
                assert_eq!(a, node.size.div_ceil(2));
            }
        }
        // 37 points at depth 5 = 32 cells: no early stops anywhere.
        assert!(tree.nodes().iter().all(|n| n.point.is_none()));
    }

    #[test]
    fn single_point_tree_reports_point() {
        let points = PointCloud::from_rows(&[vec![2.5, -1.0]]).unwrap();
        let tree = MassTree::fit(&points, Some(3)).unwrap();
        assert!(tree.root().is_leaf());
        assert_eq!(tree.root().point, Some(vec![2.5, -1.0]));
        assert_eq!(tree.evaluate(0.9).unwrap(), vec![2.5, -1.0]);
    }

    #[test]
    fn evaluate_worked_example() {
        let tree = MassTree::fit(&cloud_1d(&[1.0, 2.0, 3.0, 4.0]), Some(2)).unwrap();
        assert_eq!(tree.evaluate(0.1).unwrap(), vec![1.0]);
        assert_eq!(tree.evaluate(0.3).unwrap(), vec![1.0]);
        assert_eq!(tree.evaluate(0.6).unwrap(), vec![3.0]);
        assert_eq!(tree.evaluate(0.9).unwrap(), vec![3.0]);
        assert!(tree.evaluate(-0.1).is_err());
        assert!(tree.evaluate(1.5).is_err());
    }

    #[test]
    fn node_at_stops_at_leaves() {
        let tree = MassTree::fit(&cloud_1d(&[1.0, 2.0]), Some(4)).unwrap();
        let addr = address_of(0.2, 4).unwrap();
        let node = tree.node_at(&addr);
        assert!(node.is_leaf());
        assert_eq!(node.depth, 1);
        assert_eq!(node.point, Some(vec![1.0]));
    }

    #[test]
    fn depth_validation() {
        let c = cloud_1d(&[1.0, 2.0]);
        assert!(MassTree::fit(&c, Some(0)).is_err());
        assert!(MassTree::fit(&c, Some(MAX_TREE_DEPTH + 1)).is_err());
        assert_eq!(MassTree::fit(&c, None).unwrap().depth(), 1);
    }
}
