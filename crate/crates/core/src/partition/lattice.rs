use super::Partition;
use crate::error::{Error, Result};
use crate::lattice::Grid;

/// Assignment of every torus cell to exactly one block.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPartition {
    grid: Grid,
    block_of: Vec<usize>,
    blocks: usize,
}

impl CellPartition {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn single(grid: Grid) -> Self {
        Self { grid, block_of: vec![0; grid.len()], blocks: 1 }
    }

    /// Boxes `corner + [0, extent)` in periodic lattice coordinates; every cell must be covered once.
    pub fn from_boxes(grid: Grid, boxes: &[([i64; 3], [usize; 3])]) -> Result<Self> {
        let d = grid.dim();
        let mut block_of = vec![usize::MAX; grid.len()];
        for (b, (corner, extent)) in boxes.iter().enumerate() {
            let count: usize = extent[..d].iter().product();
            for t in 0..count {
                let mut off = [0i64; 3];
                let mut rem = t;
                for a in (0..d).rev() {
                    off[a] = corner[a] + (rem % extent[a]) as i64;
                    rem /= extent[a];
                }
                let idx = grid.offset(0, &off);
                if block_of[idx] != usize::MAX {
                    return Err(Error::Partition(format!("cell {idx} covered by blocks {} and {b}", block_of[idx])));
                }
                block_of[idx] = b;
            }
        }
        if let Some(idx) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::Partition(format!("cell {idx} not covered")));
        }
        Ok(Self { grid, block_of, blocks: boxes.len() })
    }

    /// Cubic blocks of `side` cells; `side` must divide `N`.
    pub fn uniform(grid: Grid, side: usize) -> Result<Self> {
        let n = grid.n();
        if side == 0 || !n.is_multiple_of(side) {
            return Err(Error::Partition(format!("block side {side} does not divide {n}")));
        }
        let d = grid.dim();
        let m = n / side;
        let mut boxes = Vec::new();
        for t in 0..m.pow(d as u32) {
            let mut corner = [0i64; 3];
            let mut rem = t;
            for a in (0..d).rev() {
                corner[a] = ((rem % m) * side) as i64;
                rem /= m;
            }
            let mut extent = [1usize; 3];
            extent[..d].fill(side);
            boxes.push((corner, extent));
        }
        Self::from_boxes(grid, &boxes)
    }

    /// Blocks induced by a geometric partition: each cell goes to the partition cell containing
    /// its minimal-image position. The partition must cover the torus window.
    pub fn from_partition(grid: Grid, part: &Partition) -> Result<Self> {
        if part.dim != grid.dim() {
            return Err(Error::ShapeMismatch("partition and grid dimensions differ".into()));
        }
        let mut ids = std::collections::BTreeMap::new();
        let mut block_of = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let p = grid.position(idx);
            let cell = part
                .locate(&p)
                .ok_or_else(|| Error::Partition(format!("lattice cell at {p:?} outside the partition window")))?;
            let next = ids.len();
            block_of.push(*ids.entry(cell).or_insert(next));
        }
        Ok(Self { grid, blocks: ids.len(), block_of })
    }

    /// Coarsening: blocks `a` and `b` become one.
    pub fn merge(&self, a: usize, b: usize) -> Result<Self> {
        if a >= self.blocks || b >= self.blocks || a == b {
            return Err(Error::Partition(format!("cannot merge blocks {a} and {b}")));
        }
        let (keep, gone) = (a.min(b), a.max(b));
        let block_of = self
            .block_of
            .iter()
            .map(|&k| match k {
                k if k == gone => keep,
                k if k > gone => k - 1,
                k => k,
            })
            .collect();
        Ok(Self { grid: self.grid, block_of, blocks: self.blocks - 1 })
    }
}
