use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest address this module will produce; fits comfortably in a `u64` word.
pub const MAX_ADDRESS_DEPTH: usize = 62;

fn gray(w: u64) -> u64 {
    w ^ (w >> 1)
}

/// Corner (as a d-bit position word) where the curve enters sub-cell `w`.
fn entry_corner(w: u64) -> u64 {
    if w == 0 {
        0
    } else {
        gray(2 * ((w - 1) / 2))
    }
}

/// Bit index of the axis along which the curve travels inside sub-cell `w`.
fn direction_bit(w: u64, dim: u32) -> u32 {
    if w == 0 {
        0
    } else if w % 2 == 0 {
        (w - 1).trailing_ones() % dim
    } else {
        w.trailing_ones() % dim
    }
}

/// Orientation of one Hilbert block: a signed permutation of the axes.
///
/// Logical axis `a` is the axis the curve splits at block position `a`
/// (position 0 first). `perm` maps logical axes to geometric coordinate axes;
/// `flip[a]` records whether the block traverses that geometric axis in
/// decreasing order. The root block is the identity with no flips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertState {
    perm: Vec<u8>,
    flip: Vec<bool>,
}

impl HilbertState {
    pub fn root(dim: usize) -> Self {
        Self {
            perm: (0..dim as u8).collect(),
            flip: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn geometric_axis(&self, logical: usize) -> usize {
        self.perm[logical] as usize
    }

    pub fn is_reversed(&self, logical: usize) -> bool {
        self.flip[logical]
    }

    /// Orientation of the sub-block entered with digit `w` (one full block of
    /// `dim` binary choices, most significant choice first).
    ///
    /// The sub-block's frame is a cyclic shift of the parent frame: child
    /// logical axis `j` lies along parent logical axis `(j - direction - 1)
    /// mod d`, reflected where the entry corner of `w` has a set bit. Composing
    /// that shift with `self` keeps all states expressed relative to geometric
    /// axes.
    pub fn child(&self, w: u64) -> Self {
        let d = self.dim();
        debug_assert!(w < (1u64 << d));
        let e = entry_corner(w);
        let dir = direction_bit(w, d as u32) as usize;
        let mut perm = Vec::with_capacity(d);
        let mut flip = Vec::with_capacity(d);
        for j in 0..d {
            let parent = (j + 2 * d - dir - 1) % d;
            let reflect = (e >> (d - 1 - parent)) & 1 == 1;
            perm.push(self.perm[parent]);
            flip.push(reflect ^ self.flip[parent]);
        }
        Self { perm, flip }
    }
}

/// Dyadic cell on the `t`-axis: the interval `[w, w+1) / 2^depth`.
///
/// Bit 0 is the first (coarsest) split. Cells at the same depth are totally
/// ordered by `index`, which is exactly the traversal order of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    depth: u8,
    word: u64,
}

impl CellAddress {
    pub fn new(word: u64, depth: usize) -> Result<Self> {
        if depth > MAX_ADDRESS_DEPTH {
            return Err(Error::Config(format!(
                "address depth {depth} exceeds maximum {MAX_ADDRESS_DEPTH}"
            )));
        }
        if depth < 64 && word >> depth != 0 {
            return Err(Error::Domain(format!(
                "cell index {word} out of range at depth {depth}"
            )));
        }
        Ok(Self { depth: depth as u8, word })
    }

    pub fn root() -> Self {
        Self { depth: 0, word: 0 }
    }

    pub fn depth(&self) -> usize {
        self.depth as usize
    }

    /// Position of this cell among the `2^depth` cells of its depth.
    pub fn index(&self) -> u64 {
        self.word
    }

    /// The `i`-th binary digit, `i = 0` being the first split.
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.depth as usize);
        (self.word >> (self.depth as usize - 1 - i)) & 1 == 1
    }

    pub fn child(&self, bit: bool) -> Self {
        debug_assert!((self.depth as usize) < MAX_ADDRESS_DEPTH);
        Self {
            depth: self.depth + 1,
            word: (self.word << 1) | bit as u64,
        }
    }

    pub fn prefix(&self, depth: usize) -> Self {
        debug_assert!(depth <= self.depth as usize);
        Self {
            depth: depth as u8,
            word: self.word >> (self.depth as usize - depth),
        }
    }

    pub fn is_prefix_of(&self, other: &Self) -> bool {
        self.depth <= other.depth && other.prefix(self.depth as usize) == *self
    }

    /// Lower endpoint of the interval this cell covers.
    pub fn interval_start(&self) -> f64 {
        self.word as f64 / (1u64 << self.depth) as f64
    }

    /// Midpoint of the interval this cell covers.
    pub fn midpoint(&self) -> f64 {
        (self.word as f64 + 0.5) / (1u64 << self.depth) as f64
    }
}

/// First `depth` binary digits of `t in [0, 1]`.
///
/// Dyadic points belong to the cell on their right (half-open intervals);
/// `t = 1` maps to the last cell by convention. Every step of the digit
/// extraction is exact in IEEE754 (doubling shifts the exponent and the
/// conditional subtraction is lossless), so the address is the true binary
/// expansion, never a rounded one.
pub fn address_of(t: f64, depth: usize) -> Result<CellAddress> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} lies outside [0, 1]")));
    }
    if depth > MAX_ADDRESS_DEPTH {
        return Err(Error::Config(format!(
            "address depth {depth} exceeds maximum {MAX_ADDRESS_DEPTH}"
        )));
    }
    if t == 1.0 {
        let word = if depth == 0 { 0 } else { u64::MAX >> (64 - depth) };
        return CellAddress::new(word, depth);
    }
    let mut word = 0u64;
    let mut x = t;
    for _ in 0..depth {
        x *= 2.0;
        let b = x >= 1.0;
        if b {
            x -= 1.0;
        }
        word = (word << 1) | b as u64;
    }
    Ok(CellAddress { depth: depth as u8, word })
}

/// Walking position along the curve: the orientation of the enclosing block
/// plus the binary choices already made inside it.
///
/// `partial` holds the `pos` low bits chosen so far in this block, most recent
/// in bit 0. Completing a block (the `dim`-th choice) advances to the
/// sub-block's own frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveCursor {
    state: HilbertState,
    partial: u64,
    pos: usize,
}

impl CurveCursor {
    pub fn new(dim: usize) -> Self {
        Self {
            state: HilbertState::root(dim),
            partial: 0,
            pos: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn state(&self) -> &HilbertState {
        &self.state
    }

    pub fn block_position(&self) -> usize {
        self.pos
    }

    /// Geometric axis of the next split, and whether the low-`t` side of that
    /// split occupies the geometrically upper half.
    ///
    /// Within a block the geometric side of choice `i` is `c_i XOR c_{i-1}`
    /// (Gray coding of the block digit), so a previous choice of 1 reverses
    /// the next axis on top of the block's own flip.
    pub fn split_plan(&self) -> (usize, bool) {
        let prev = self.pos > 0 && self.partial & 1 == 1;
        (
            self.state.geometric_axis(self.pos),
            self.state.is_reversed(self.pos) ^ prev,
        )
    }

    pub fn descend(&self, bit: bool) -> Self {
        let d = self.dim();
        let partial = (self.partial << 1) | bit as u64;
        if self.pos + 1 == d {
            Self {
                state: self.state.child(partial),
                partial: 0,
                pos: 0,
            }
        } else {
            Self {
                state: self.state.clone(),
                partial,
                pos: self.pos + 1,
            }
        }
    }
}

/// Integer coordinates of the box a cell occupies, one value per geometric
/// axis, together with how many binary splits each axis has received.
///
/// Axis `a`'s box is `[coords[a], coords[a]+1) / 2^levels[a]` in the unit
/// cube; useful for geometric checks and cell enumeration.
pub fn cell_coords(addr: &CellAddress, dim: usize) -> (Vec<u64>, Vec<u32>) {
    let mut cursor = CurveCursor::new(dim);
    let mut coords = vec![0u64; dim];
    let mut levels = vec![0u32; dim];
    for i in 0..addr.depth() {
        let (axis, reversed) = cursor.split_plan();
        let side = addr.bit(i) ^ reversed;
        coords[axis] = (coords[axis] << 1) | side as u64;
        levels[axis] += 1;
        cursor = cursor.descend(addr.bit(i));
    }
    (coords, levels)
}
