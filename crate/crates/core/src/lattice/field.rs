use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::par;

/// Real scalar field on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} cells",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    /// Field with `value(position)` evaluated at minimal-image cell positions.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> Self {
        let mut data = vec![0.0; grid.len()];
        par::zip_map(&mut data, |idx| f(grid.position(idx)));
        Self { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        par::sum(&self.data) / self.data.len() as f64
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.data.iter_mut().for_each(|v| *v -= m);
    }

    /// Discrete L2 norm `(sum_x u(x)^2)^(1/2)` (unit cell volume).
    pub fn norm(&self) -> f64 {
        par::dot(&self.data, &self.data).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Vector field with `dim` components, stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, comps: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        Self { grid, comps: (0..grid.dim()).map(|i| vec![value[i]; grid.len()]).collect() }
    }

    pub fn from_components(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch("vector field components".into()));
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn mean(&self) -> Vec<f64> {
        self.comps.iter().map(|c| par::sum(c) / c.len() as f64).collect()
    }

    pub fn norm(&self) -> f64 {
        self.comps.iter().map(|c| par::dot(c, c)).sum::<f64>().sqrt()
    }

    /// `sum_x F(x) . G(x)`
    pub fn inner(&self, other: &VectorField) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| par::dot(a, b)).sum()
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (i, c) in self.comps.iter().enumerate() {
            v[i] = c[idx];
        }
        v
    }
}

/// Number of stored `(j, k)` pairs with `j < k`.
pub fn skew_pairs(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

pub fn pair_index(dim: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < dim);
    // (0,1) (0,2) (1,2)
    j * (2 * dim - j - 1) / 2 + (k - j - 1)
}

/// Tensor field `s(i, j, k)` antisymmetric in `(j, k)`; only `j < k` is stored,
/// so `s(i, j, k) = -s(i, k, j)` holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewTensorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl SkewTensorField {
    pub fn zeros(grid: Grid) -> Self {
        let d = grid.dim();
        Self { grid, comps: vec![vec![0.0; grid.len()]; d * skew_pairs(d)] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn slot(&self, i: usize, j: usize, k: usize) -> usize {
        i * skew_pairs(self.grid.dim()) + pair_index(self.grid.dim(), j, k)
    }

    /// Stored component for `j < k`.
    pub fn upper(&self, i: usize, j: usize, k: usize) -> &[f64] {
        &self.comps[self.slot(i, j, k)]
    }

    pub fn upper_mut(&mut self, i: usize, j: usize, k: usize) -> &mut Vec<f64> {
        let s = self.slot(i, j, k);
        &mut self.comps[s]
    }

    /// Value of `s(i, j, k)` at cell `idx` for any index triple.
    pub fn value(&self, i: usize, j: usize, k: usize, idx: usize) -> f64 {
        use std::cmp::Ordering::*;
        match j.cmp(&k) {
            Less => self.comps[self.slot(i, j, k)][idx],
            Greater => -self.comps[self.slot(i, k, j)][idx],
            Equal => 0.0,
        }
    }

    /// All stored components in `(i, (j<k))` order.
    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
}

/// Cell-centered `dim x dim` coefficient matrices, row-major entries, component-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    grid: Grid,
    entries: Vec<Vec<f64>>,
}

impl CoefficientField {
    pub fn from_entries(grid: Grid, entries: Vec<Vec<f64>>) -> Result<Self> {
        let d = grid.dim();
        if entries.len() != d * d || entries.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch("coefficient field entries".into()));
        }
        Ok(Self { grid, entries })
    }

    /// Spatially constant coefficient `matrix` (row-major).
    pub fn constant(grid: Grid, matrix: &[f64]) -> Self {
        let d = grid.dim();
        assert_eq!(matrix.len(), d * d);
        Self { grid, entries: matrix.iter().map(|&v| vec![v; grid.len()]).collect() }
    }

    /// `c * Id`
    pub fn scalar_constant(grid: Grid, c: f64) -> Self {
        let d = grid.dim();
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = c;
        }
        Self::constant(grid, &m)
    }

    /// Diagonal field `diag(diag[0](x), ..., diag[d-1](x))`.
    pub fn diagonal(grid: Grid, diag: Vec<Vec<f64>>) -> Result<Self> {
        let d = grid.dim();
        if diag.len() != d {
            return Err(Error::ShapeMismatch("diagonal coefficient".into()));
        }
        let mut entries = vec![vec![0.0; grid.len()]; d * d];
        for (i, c) in diag.into_iter().enumerate() {
            entries[i * d + i] = c;
        }
        Self::from_entries(grid, entries)
    }

    /// Laminate `a(x) = profile[x_1 mod len] Id` varying along the first axis only.
    pub fn laminate(grid: Grid, profile: &[f64]) -> Result<Self> {
        if profile.is_empty() || !grid.n().is_multiple_of(profile.len()) {
            return Err(Error::InvalidParameter(format!(
                "laminate profile of length {} does not tile {} cells",
                profile.len(),
                grid.n()
            )));
        }
        let vals: Vec<f64> = (0..grid.len()).map(|idx| profile[grid.coords(idx)[0] % profile.len()]).collect();
        Self::diagonal(grid, vec![vals; grid.dim()])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn entry(&self, m: usize, n: usize) -> &[f64] {
        &self.entries[m * self.dim() + n]
    }

    pub fn entry_mut(&mut self, m: usize, n: usize) -> &mut [f64] {
        let d = self.dim();
        &mut self.entries[m * d + n]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Row-major matrix at cell `idx`.
    pub fn matrix_at(&self, idx: usize) -> [f64; 9] {
        let mut m = [0.0; 9];
        for (c, e) in self.entries.iter().enumerate() {
            m[c] = e[idx];
        }
        m
    }

    pub fn set_matrix_at(&mut self, idx: usize, m: &[f64]) {
        for (c, e) in self.entries.iter_mut().enumerate() {
            e[idx] = m[c];
        }
    }

    /// Pointwise transpose.
    pub fn transposed(&self) -> Self {
        let d = self.dim();
        let mut entries = self.entries.clone();
        for m in 0..d {
            for n in 0..d {
                entries[m * d + n] = self.entries[n * d + m].clone();
            }
        }
        Self { grid: self.grid, entries }
    }

    /// Exact pointwise symmetry `a = a^T`.
    pub fn is_symmetric(&self) -> bool {
        let d = self.dim();
        (0..d).all(|m| (m + 1..d).all(|n| self.entry(m, n) == self.entry(n, m)))
    }

    /// Torus average of the symmetric part (row-major).
    pub fn mean_symmetric(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for m in 0..d {
            for n in 0..d {
                let a = par::sum(self.entry(m, n)) / self.grid.len() as f64;
                out[m * d + n] += 0.5 * a;
                out[n * d + m] += 0.5 * a;
            }
        }
        out
    }

    /// `out = a(x) v(x)` cellwise.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        let d = self.dim();
        let mut out = VectorField::zeros(self.grid);
        for m in 0..d {
            let o = out.component_mut(m);
            par::zip_map(o, |idx| (0..d).map(|n| self.entries[m * d + n][idx] * v.component(n)[idx]).sum());
        }
        out
    }

    /// `a(x) e_i`, i.e. column `i` of the coefficient.
    pub fn column(&self, i: usize) -> VectorField {
        let d = self.dim();
        let comps = (0..d).map(|m| self.entry(m, i).to_vec()).collect();
        VectorField { grid: self.grid, comps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_storage_is_exactly_antisymmetric() {
        let g = Grid::new(3, 8).unwrap();
        let mut s = SkewTensorField::zeros(g);
        for i in 0..3 {
            for (j, k) in [(0, 1), (0, 2), (1, 2)] {
                s.upper_mut(i, j, k)[5] = (i * 10 + j * 3 + k) as f64 + 0.25;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(s.value(i, j, k, 5), -s.value(i, k, j, 5));
                }
                assert_eq!(s.value(i, j, j, 5), 0.0);
            }
        }
    }

    #[test]
    fn laminate_profile_must_tile() {
        let g = Grid::new(2, 8).unwrap();
        assert!(CoefficientField::laminate(g, &[1.0, 0.5, 0.25]).is_err());
        let a = CoefficientField::laminate(g, &[1.0, 0.5, 0.25, 0.5]).unwrap();
        assert_eq!(a.entry(0, 0)[g.index(&[5, 3])], 0.5);
        assert_eq!(a.entry(0, 1)[0], 0.0);
        assert!(a.is_symmetric());
    }

    #[test]
    fn transpose_swaps_off_diagonals() {
        let g = Grid::new(2, 8).unwrap();
        let a = CoefficientField::constant(g, &[1.0, 0.2, -0.3, 0.8]);
        let t = a.transposed();
        assert_eq!(t.matrix_at(3)[..4], [1.0, -0.3, 0.2, 0.8]);
        assert!(!a.is_symmetric());
    }
}
