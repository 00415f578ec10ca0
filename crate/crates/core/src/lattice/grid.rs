use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic cubic lattice with unit spacing: `n` cells per axis in `dim` dimensions.
///
/// Cells are stored row-major with the last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    /// A user-facing grid: `dim` in {2, 3}, `n >= 8` and even.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("{n} cells per axis; need an even count >= 8")));
        }
        Ok(Self { dim, n })
    }

    /// Auxiliary torus used for local (patch) problems; any `n >= 3`.
    pub(crate) fn patch(dim: usize, n: usize) -> Self {
        assert!((dim == 2 || dim == 3) && n >= 3);
        Self { dim, n }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Torus side length `L = n h` with `h = 1`.
    pub fn side_length(&self) -> f64 {
        self.n as f64
    }

    /// Memory stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            c[axis] = rem % self.n;
            rem /= self.n;
        }
        c
    }

    pub fn index(&self, c: &[usize]) -> usize {
        c.iter().take(self.dim).fold(0, |acc, &ci| acc * self.n + ci)
    }

    /// Index of `idx + offset` with periodic wrap.
    pub fn offset(&self, idx: usize, offset: &[i64; 3]) -> usize {
        let c = self.coords(idx);
        let n = self.n as i64;
        let mut out = 0usize;
        for axis in 0..self.dim {
            let v = (c[axis] as i64 + offset[axis]).rem_euclid(n) as usize;
            out = out * self.n + v;
        }
        out
    }

    /// Minimal-image representative of a coordinate difference, in `[-n/2, n/2)`.
    pub fn min_image(&self, delta: i64) -> i64 {
        let n = self.n as i64;
        let r = delta.rem_euclid(n);
        if r >= (n + 1) / 2 {
            r - n
        } else {
            r
        }
    }

    /// Minimal-image displacement from `from` to `to`.
    pub fn displacement(&self, from: &[usize; 3], to: &[usize; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for axis in 0..self.dim {
            out[axis] = self.min_image(to[axis] as i64 - from[axis] as i64) as f64;
        }
        out
    }

    /// Position of cell `idx` relative to the origin cell, minimal image.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        self.displacement(&[0; 3], &self.coords(idx))
    }

    /// Dyadic radii `1, 2, 4, ...` up to `L / 8`.
    pub fn dyadic_radii(&self) -> Vec<f64> {
        let cap = self.side_length() / 8.0;
        let mut out = Vec::new();
        let mut r = 1.0;
        while r <= cap {
            out.push(r);
            r *= 2.0;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(1, 16).is_err());
        assert!(Grid::new(4, 16).is_err());
        assert!(Grid::new(2, 6).is_err());
        assert!(Grid::new(2, 9).is_err());
        assert!(Grid::new(3, 96).is_ok());
    }

    #[test]
    fn coords_roundtrip() {
        let g = Grid::new(3, 8).unwrap();
        for idx in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.index(&g.coords(idx)), idx);
        }
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn offsets_wrap() {
        let g = Grid::new(2, 8).unwrap();
        let idx = g.index(&[7, 0]);
        assert_eq!(g.offset(idx, &[1, -1, 0]), g.index(&[0, 7]));
        assert_eq!(g.min_image(5), -3);
        assert_eq!(g.min_image(-4), -4);
        assert_eq!(g.min_image(3), 3);
    }

    #[test]
    fn dyadic_ladder() {
        let g = Grid::new(2, 512).unwrap();
        assert_eq!(g.dyadic_radii(), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }
}
