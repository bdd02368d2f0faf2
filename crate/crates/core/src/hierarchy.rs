//! Index arithmetic on the hierarchical lattice `X = {0, 1, 2, …}`.
//!
//! The distance between two sites is the smallest `k` such that the integer
//! quotients `⌊x/n^k⌋` and `⌊y/n^k⌋` agree. Balls of equal radius are either
//! identical or disjoint, so the radius-`r` balls inside `B_k` form an exact
//! partition into `n^(k−r)` contiguous blocks.

use crate::error::{Error, Result};

/// Branching data of the hierarchical lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyGeometry {
    branching: u32,
}

impl HierarchyGeometry {
    /// A lattice with `branching ≥ 2` children per node.
    pub fn new(branching: u32) -> Result<Self> {
        if branching < 2 {
            return Err(Error::InvalidParameter(format!(
                "branching factor must be at least 2, got {branching}"
            )));
        }
        Ok(Self { branching })
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    /// Number of sites in a radius-`level` ball, `n^level`.
    pub fn volume(&self, level: u32) -> Result<usize> {
        (self.branching as usize).checked_pow(level).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "volume {}^{level} overflows the address space",
                self.branching
            ))
        })
    }

    /// Hierarchical distance: the smallest `k ≥ 0` with `⌊x/n^k⌋ = ⌊y/n^k⌋`.
    ///
    /// Symmetric, zero exactly on the diagonal, and ultrametric.
    pub fn distance(&self, x: usize, y: usize) -> u32 {
        let n = self.branching as usize;
        let (mut qx, mut qy) = (x, y);
        let mut level = 0;
        while qx != qy {
            qx /= n;
            qy /= n;
            level += 1;
        }
        level
    }

    /// The closed ball of the given radius containing `center`.
    pub fn ball(&self, center: usize, radius: u32) -> Result<Ball> {
        let size = self.volume(radius)?;
        Ok(Ball {
            start: center / size * size,
            size,
            radius,
        })
    }

    /// Partition of `B_k` into its `n^(k−r)` radius-`r` blocks, in site order.
    ///
    /// Block `j` (0-based) covers sites `j·n^r … (j+1)·n^r − 1`; the first
    /// block is the ball `B_r` itself.
    pub fn partition(&self, k: u32, r: u32) -> Result<Vec<Ball>> {
        if r > k {
            return Err(Error::InvalidParameter(format!(
                "block radius {r} exceeds volume level {k}"
            )));
        }
        let block_size = self.volume(r)?;
        let count = self.volume(k - r)?;
        Ok((0..count)
            .map(|j| Ball {
                start: j * block_size,
                size: block_size,
                radius: r,
            })
            .collect())
    }
}

/// A closed hierarchical ball: a contiguous range of `n^radius` sites
/// starting at a multiple of its size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ball {
    start: usize,
    size: usize,
    radius: u32,
}

impl Ball {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Member sites as a contiguous range.
    pub fn members(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }

    pub fn contains(&self, site: usize) -> bool {
        site >= self.start && site < self.start + self.size
    }
}
