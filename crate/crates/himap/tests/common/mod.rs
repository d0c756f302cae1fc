//! Independent reference implementations used to cross-check the library.
//!
//! Everything here is written the slow, obvious way on purpose: full sorts
//! instead of selection, explicit interval bisection on `t` instead of bit
//! arithmetic, and (for d = 2) a literal four-state orientation table instead
//! of the general signed-permutation machinery. No code is shared with the
//! crate being tested.

#![allow(dead_code)]

/// Quadrants of a 2D box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quad {
    LL,
    LR,
    UL,
    UR,
}

impl Quad {
    fn x(self) -> u8 {
        matches!(self, Quad::LR | Quad::UR) as u8
    }
    fn y(self) -> u8 {
        matches!(self, Quad::UL | Quad::UR) as u8
    }
}

/// The four reachable orientations of the 2D curve. `order` lists which
/// quadrant each quarter of the `t`-interval occupies; `next` gives the
/// orientation of the corresponding sub-block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orient {
    A, // identity: LL, UL, UR, LR
    B, // main-diagonal reflection: LL, LR, UR, UL
    C, // anti-diagonal reflection: UR, UL, LL, LR
    D, // half-turn: UR, LR, LL, UL
}

impl Orient {
    fn order(self) -> [Quad; 4] {
        match self {
            Orient::A => [Quad::LL, Quad::UL, Quad::UR, Quad::LR],
            Orient::B => [Quad::LL, Quad::LR, Quad::UR, Quad::UL],
            Orient::C => [Quad::UR, Quad::UL, Quad::LL, Quad::LR],
            Orient::D => [Quad::UR, Quad::LR, Quad::LL, Quad::UL],
        }
    }
    fn next(self) -> [Orient; 4] {
        match self {
            Orient::A => [Orient::B, Orient::A, Orient::A, Orient::C],
            Orient::B => [Orient::A, Orient::B, Orient::B, Orient::D],
            Orient::C => [Orient::D, Orient::C, Orient::C, Orient::A],
            Orient::D => [Orient::C, Orient::D, Orient::D, Orient::B],
        }
    }
}

/// Splits `indices` into (low-t half, cut, high-t half) along `axis`.
/// `low_is_upper` says the low-t half occupies the geometrically upper side.
/// Ties always fill the low-t half smallest original index first.
fn split_half(
    points: &[Vec<f64>],
    indices: &[usize],
    axis: usize,
    low_is_upper: bool,
) -> (Vec<usize>, f64, Vec<usize>) {
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_by(|&i, &j| {
        let (a, b) = (points[i][axis], points[j][axis]);
        let ord = if low_is_upper {
            b.partial_cmp(&a).unwrap()
        } else {
            a.partial_cmp(&b).unwrap()
        };
        ord.then(i.cmp(&j))
    });
    let take = indices.len().div_ceil(2);
    let cut = points[sorted[take - 1]][axis];
    let low = sorted[..take].to_vec();
    let high = sorted[take..].to_vec();
    (low, cut, high)
}

struct RefWalk<'a> {
    points: &'a [Vec<f64>],
    max_depth: usize,
    t: f64,
    cuts: Vec<Option<f64>>,
    root_box: Vec<(f64, f64)>,
}

impl<'a> RefWalk<'a> {
    fn finish(&self, indices: &[usize], depth: usize) -> Vec<f64> {
        if indices.len() == 1 && depth < self.max_depth {
            return self.points[indices[0]].clone();
        }
        self.cuts
            .iter()
            .zip(&self.root_box)
            .map(|(c, &(lo, hi))| c.unwrap_or(0.5 * (lo + hi)))
            .collect()
    }

    /// One binary split: keep the half of the interval containing `t`.
    fn step(
        &mut self,
        indices: Vec<usize>,
        lo_t: f64,
        hi_t: f64,
        axis: usize,
        low_is_upper: bool,
    ) -> (Vec<usize>, f64, f64, bool) {
        let (low, cut, high) = split_half(self.points, &indices, axis, low_is_upper);
        self.cuts[axis] = Some(cut);
        // Dyadic midpoints are exact in f64 at these depths, so this
        // comparison reproduces the half-open interval convention exactly
        // (and sends t = 1 down the upper branch at every level).
        let mid = 0.5 * (lo_t + hi_t);
        if self.t >= mid {
            (high, mid, hi_t, true)
        } else {
            (low, lo_t, mid, false)
        }
    }
}

/// Reference quantile-map evaluation for d = 2.
pub fn reference_eval_2d(points: &[Vec<f64>], max_depth: usize, t: f64) -> Vec<f64> {
    assert!(points.iter().all(|p| p.len() == 2));
    assert!((0.0..=1.0).contains(&t));
    let mut walk = RefWalk {
        points,
        max_depth,
        t,
        cuts: vec![None, None],
        root_box: bounding_box(points),
    };
    let mut indices: Vec<usize> = (0..points.len()).collect();
    let mut orient = Orient::A;
    let (mut lo_t, mut hi_t) = (0.0, 1.0);
    let mut depth = 0;
    loop {
        if indices.len() < 2 || depth == max_depth {
            return walk.finish(&indices, depth);
        }
        let order = orient.order();
        // First split of the block: quarters {0,1} vs {2,3}. They differ on
        // exactly one axis; the low-t side is where quarter 0 sits.
        let axis = if order[0].x() == order[1].x() { 0 } else { 1 };
        let side0 = if axis == 0 { order[0].x() } else { order[0].y() };
        let (ind, l, h, first_high) = walk.step(indices, lo_t, hi_t, axis, side0 == 1);
        indices = ind;
        lo_t = l;
        hi_t = h;
        depth += 1;
        if indices.len() < 2 || depth == max_depth {
            return walk.finish(&indices, depth);
        }
        // Second split: within the chosen pair of quarters.
        let pair = if first_high {
            [order[2], order[3]]
        } else {
            [order[0], order[1]]
        };
        let axis = if pair[0].x() == pair[1].x() { 1 } else { 0 };
        let side0 = if axis == 0 { pair[0].x() } else { pair[0].y() };
        let (ind, l, h, second_high) = walk.step(indices, lo_t, hi_t, axis, side0 == 1);
        indices = ind;
        lo_t = l;
        hi_t = h;
        depth += 1;
        let digit = (first_high as usize) * 2 + second_high as usize;
        orient = orient.next()[digit];
    }
}

/// Reference quantile-map evaluation for d = 1 (plain dyadic median tree).
pub fn reference_eval_1d(values: &[f64], max_depth: usize, t: f64) -> f64 {
    let points: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    assert!((0.0..=1.0).contains(&t));
    let mut walk = RefWalk {
        points: &points,
        max_depth,
        t,
        cuts: vec![None],
        root_box: bounding_box(&points),
    };
    let mut indices: Vec<usize> = (0..points.len()).collect();
    let (mut lo_t, mut hi_t) = (0.0, 1.0);
    let mut depth = 0;
    loop {
        if indices.len() < 2 || depth == max_depth {
            return walk.finish(&indices, depth)[0];
        }
        let (ind, l, h, _) = walk.step(indices, lo_t, hi_t, 0, false);
        indices = ind;
        lo_t = l;
        hi_t = h;
        depth += 1;
    }
}

pub fn bounding_box(points: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let dim = points[0].len();
    let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for p in points {
        for a in 0..dim {
            b[a].0 = b[a].0.min(p[a]);
            b[a].1 = b[a].1.max(p[a]);
        }
    }
    b
}

/// Classical one-dimensional empirical quantile `F^{-1}(t) = x_(ceil(t n))`,
/// with `t = 0` mapping to the smallest order statistic.
pub fn classical_quantile(sorted: &[f64], t: f64) -> f64 {
    assert!((0.0..=1.0).contains(&t));
    let n = sorted.len();
    let k = (t * n as f64).ceil() as usize;
    sorted[k.clamp(1, n) - 1]
}

/// Exact 1D squared Wasserstein-2 between equal-size sorted samples, done
/// the naive way for cross-checking.
pub fn naive_w2_1d(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mean: f64 = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    mean.sqrt()
}

/// Brute-force optimal assignment cost over all permutations; usable to n≈9.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, cost, &mut best);
    best
}

fn permute(perm: &mut Vec<usize>, k: usize, cost: &[Vec<f64>], best: &mut f64) {
    let n = perm.len();
    if k == n {
        let total: f64 = (0..n).map(|i| cost[i][perm[i]]).sum();
        *best = best.min(total);
        return;
    }
    for i in k..n {
        perm.swap(k, i);
        permute(perm, k + 1, cost, best);
        perm.swap(k, i);
    }
}
