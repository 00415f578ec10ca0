use crate::error::{Error, Result};
use crate::lattice::{Grid, ScalarField, Spectral, VectorField};

/// Discrete ball: cells whose centers lie within `radius` of `center` under the periodic metric.
#[derive(Clone, Debug)]
pub struct Ball {
    grid: Grid,
    center: usize,
    radius: f64,
    offsets: Vec<[i64; 3]>,
}

/// Integer offsets `o` with `|o| <= radius`.
pub(crate) fn ball_offsets(dim: usize, radius: f64) -> Vec<[i64; 3]> {
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    let zr = if dim == 3 { r } else { 0 };
    for a in -r..=r {
        for b in -r..=r {
            for c in -zr..=zr {
                if (a * a + b * b + c * c) as f64 <= r2 + 1e-12 {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

impl Ball {
    pub fn new(grid: Grid, center: usize, radius: f64) -> Result<Self> {
        if !(radius >= 0.5) {
            return Err(Error::BallRadius { radius, max: grid.side_length() / 4.0 });
        }
        if radius > grid.side_length() / 4.0 {
            return Err(Error::BallRadius { radius, max: grid.side_length() / 4.0 });
        }
        if center >= grid.len() {
            return Err(Error::ShapeMismatch(format!("ball center {center} outside grid")));
        }
        Ok(Self { grid, center, radius, offsets: ball_offsets(grid.dim(), radius) })
    }

    pub fn at_origin(grid: Grid, radius: f64) -> Result<Self> {
        Self::new(grid, 0, radius)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn offsets(&self) -> &[[i64; 3]] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Cell indices, in offset order.
    pub fn cells(&self) -> Vec<usize> {
        self.offsets.iter().map(|o| self.grid.offset(self.center, o)).collect()
    }

    /// Same radius, different center.
    pub fn recentered(&self, center: usize) -> Self {
        Self { center, ..self.clone() }
    }

    /// Indicator of the ball as a 0/1 vector over the grid.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.grid.len()];
        for c in self.cells() {
            m[c] = true;
        }
        m
    }
}

pub fn ball_average(u: &ScalarField, ball: &Ball) -> Result<f64> {
    if u.grid() != ball.grid() {
        return Err(Error::ShapeMismatch("field and ball live on different grids".into()));
    }
    let s: f64 = ball.cells().iter().map(|&c| u.data()[c]).sum();
    Ok(s / ball.len() as f64)
}

pub fn ball_average_vector(u: &VectorField, ball: &Ball) -> Result<Vec<f64>> {
    if u.grid() != ball.grid() {
        return Err(Error::ShapeMismatch("field and ball live on different grids".into()));
    }
    let cells = ball.cells();
    Ok(u
        .components()
        .iter()
        .map(|c| cells.iter().map(|&i| c[i]).sum::<f64>() / cells.len() as f64)
        .collect())
}

/// Moving ball average on scale `scale`; radii below one cell return the field unchanged.
pub fn box_mollify(u: &ScalarField, scale: f64) -> Result<ScalarField> {
    let grid = u.grid();
    if scale > grid.side_length() / 4.0 {
        return Err(Error::BallRadius { radius: scale, max: grid.side_length() / 4.0 });
    }
    if scale < 1.0 {
        return Ok(u.clone());
    }
    let offsets = ball_offsets(grid.dim(), scale);
    let w = 1.0 / offsets.len() as f64;
    let mut kernel = vec![0.0; grid.len()];
    for o in &offsets {
        kernel[grid.offset(0, o)] = w;
    }
    let sp = Spectral::for_grid(grid);
    ScalarField::from_vec(grid, sp.convolve(u.data(), &kernel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_are_reproduced() {
        let g = Grid::new(3, 16).unwrap();
        let u = ScalarField::constant(g, 2.5);
        for r in [0.5, 1.0, 2.7, 4.0] {
            let b = Ball::new(g, 77, r).unwrap();
            assert!((ball_average(&u, &b).unwrap() - 2.5).abs() < 1e-15);
        }
        let m = box_mollify(&u, 3.0).unwrap();
        assert!(m.data().iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn radius_bounds() {
        let g = Grid::new(2, 16).unwrap();
        assert!(Ball::new(g, 0, 8.0).is_err());
        assert!(Ball::new(g, 0, 4.0).is_ok());
        assert!(Ball::new(g, 0, 0.4).is_err());
        assert!(box_mollify(&ScalarField::zeros(g), 5.0).is_err());
    }

    #[test]
    fn nine_cell_disk() {
        let g = Grid::new(2, 8).unwrap();
        let center = g.index(&[3, 4]);
        let b = Ball::new(g, center, 1.5).unwrap();
        assert_eq!(b.len(), 9);
        let mut cells = b.cells();
        cells.sort();
        let mut expected = Vec::new();
        for x in 2..=4 {
            for y in 3..=5 {
                expected.push(g.index(&[x, y]));
            }
        }
        expected.sort();
        assert_eq!(cells, expected);
        let u = ScalarField::from_vec(g, (0..g.len()).map(|i| i as f64).collect()).unwrap();
        let avg = ball_average(&u, &b).unwrap();
        assert!((avg - expected.iter().sum::<usize>() as f64 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn disk_wraps_across_seam() {
        let g = Grid::new(2, 8).unwrap();
        let b = Ball::new(g, 0, 1.0).unwrap();
        let mut cells = b.cells();
        cells.sort();
        assert_eq!(cells, vec![0, 1, 7, 8, 56]);
    }

    #[test]
    fn mollify_is_mass_preserving_and_local() {
        let g = Grid::new(2, 32).unwrap();
        let u = ScalarField::from_vec(g, (0..g.len()).map(|i| ((i * 7919) % 113) as f64).collect()).unwrap();
        let m = box_mollify(&u, 3.0).unwrap();
        assert!((m.mean() - u.mean()).abs() < 1e-12 * u.mean().abs());
        for idx in [0, 5, 500, 1023] {
            let b = Ball::new(g, idx, 3.0).unwrap();
            assert!((m.data()[idx] - ball_average(&u, &b).unwrap()).abs() < 1e-10);
        }
        let same = box_mollify(&u, 0.5).unwrap();
        assert_eq!(same, u);
    }

    proptest! {
        #[test]
        fn ball_average_is_monotone(vals in proptest::collection::vec(-5.0f64..5.0, 64), bump in proptest::collection::vec(0.0f64..1.0, 64), center in 0usize..64, r in 0.5f64..2.0) {
            let g = Grid::new(2, 8).unwrap();
            let u = ScalarField::from_vec(g, vals.clone()).unwrap();
            let v = ScalarField::from_vec(g, vals.iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
            let b = Ball::new(g, center, r).unwrap();
            prop_assert!(ball_average(&u, &b).unwrap() <= ball_average(&v, &b).unwrap() + 1e-12);
        }
    }
}
