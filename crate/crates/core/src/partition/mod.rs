//! Triadic partitions of space whose cells grow like `(dist + 1)^beta`, their
//! refinement constant and interaction sums, plus lattice partitions of the torus.

mod interaction;
mod lattice;

pub use interaction::interaction_sum;
pub use lattice::CellPartition;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned half-open cube `corner + [0, side)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: [f64; 3],
    pub side: f64,
}

impl Cube {
    pub fn diam(&self, dim: usize) -> f64 {
        (dim as f64).sqrt() * self.side
    }

    /// Distance from the closed cube to the origin.
    pub fn dist(&self, dim: usize) -> f64 {
        (0..dim)
            .map(|a| {
                let lo = self.corner[a];
                let hi = lo + self.side;
                lo.max(-hi).max(0.0).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, dim: usize, p: &[f64; 3]) -> bool {
        (0..dim).all(|a| p[a] >= self.corner[a] && p[a] < self.corner[a] + self.side)
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.side.powi(dim as i32)
    }
}

/// Distance between two closed cubes.
pub fn cube_distance(dim: usize, a: &Cube, b: &Cube) -> f64 {
    (0..dim)
        .map(|k| {
            let gap = (a.corner[k] - (b.corner[k] + b.side)).max(b.corner[k] - (a.corner[k] + a.side)).max(0.0);
            gap * gap
        })
        .sum::<f64>()
        .sqrt()
}

/// A cube `Q` of the coarse family, split into `n^d` equal subcubes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParentCube {
    pub cube: Cube,
    /// Triadic level `k`, `-1` for the central cube.
    pub level: i32,
    pub n: usize,
    /// Index of the first subcube in `Partition::cells`; subcubes follow in row-major lattice order.
    pub first: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    pub cube: Cube,
    pub diam: f64,
    pub dist: f64,
    pub n_q: usize,
    pub parent: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub dim: usize,
    pub half_width: f64,
    pub beta: f64,
    pub parents: Vec<ParentCube>,
    pub cells: Vec<PartitionCell>,
    /// Invariant under coordinate permutations and reflections (true for the triadic construction).
    pub symmetric: bool,
}

/// The unique `n >= 1` with `diam / n <= rho < diam / (n - 1)`.
pub fn subdivision_count(diam: f64, rho: f64) -> usize {
    let x = diam / rho;
    let mut n = x.ceil().max(1.0) as usize;
    // guard against ceil landing one off through rounding
    while n > 1 && diam / (n - 1) as f64 <= rho {
        n -= 1;
    }
    while diam / n as f64 > rho {
        n += 1;
    }
    n
}

fn triadic_levels(half_width: f64) -> Result<u32> {
    let mut k = 0u32;
    let mut w = 0.5;
    while w < half_width * (1.0 - 1e-12) {
        w *= 3.0;
        k += 1;
        if k > 40 {
            break;
        }
    }
    if (w - half_width).abs() > 1e-9 * half_width {
        return Err(Error::Partition(format!("half-width {half_width} is not 3^K / 2")));
    }
    Ok(k)
}

impl Partition {
    /// Partition from explicit parent cubes and subdivision counts.
    pub fn from_parents(dim: usize, beta: f64, half_width: f64, parents: Vec<(Cube, i32, usize)>, symmetric: bool) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in {{2, 3}}")));
        }
        let mut cells = Vec::new();
        let mut out = Vec::new();
        for (pi, (cube, level, n)) in parents.into_iter().enumerate() {
            if n == 0 {
                return Err(Error::Partition("subdivision count must be positive".into()));
            }
            out.push(ParentCube { cube, level, n, first: cells.len() });
            let s = cube.side / n as f64;
            let total = n.pow(dim as u32);
            for t in 0..total {
                let mut corner = [0.0; 3];
                let mut rem = t;
                for a in (0..dim).rev() {
                    corner[a] = cube.corner[a] + (rem % n) as f64 * s;
                    rem /= n;
                }
                let c = Cube { corner, side: s };
                cells.push(PartitionCell { cube: c, diam: c.diam(dim), dist: c.dist(dim), n_q: n, parent: pi });
            }
        }
        Ok(Self { dim, half_width, beta, parents: out, cells, symmetric })
    }

    /// Cell containing `p`, if any.
    pub fn locate(&self, p: &[f64; 3]) -> Option<usize> {
        let d = self.dim;
        self.parents.iter().find(|q| q.cube.contains(d, p)).map(|q| {
            let s = q.cube.side / q.n as f64;
            let mut t = 0;
            for a in 0..d {
                let i = (((p[a] - q.cube.corner[a]) / s).floor() as usize).min(q.n - 1);
                t = t * q.n + i;
            }
            q.first + t
        })
    }

    /// Number of parent cubes containing `p`.
    fn cover_count(&self, p: &[f64; 3]) -> usize {
        self.parents.iter().filter(|q| q.cube.contains(self.dim, p)).count()
    }

    /// Exact tiling of `[-W, W)^d`: total volume and point membership on random samples.
    pub fn check_tiling(&self, samples: usize, seed: u64) -> Result<()> {
        let d = self.dim;
        let w = self.half_width;
        let vol: f64 = self.cells.iter().map(|c| c.cube.volume(d)).sum();
        let target = (2.0 * w).powi(d as i32);
        if (vol - target).abs() > 1e-10 * target {
            return Err(Error::Partition(format!("cell volumes sum to {vol}, region has {target}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let mut p = [0.0; 3];
            for v in p.iter_mut().take(d) {
                *v = rng.random_range(-w..w);
            }
            let k = self.cover_count(&p);
            if k != 1 {
                return Err(Error::Partition(format!("point {p:?} covered {k} times")));
            }
            let cell = self.locate(&p).expect("covered point");
            if !self.cells[cell].cube.contains(d, &p) {
                return Err(Error::Partition(format!("point {p:?} misattributed")));
            }
        }
        Ok(())
    }

    /// One row per cell: corner coordinates, side, diam, dist, n_Q.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let axes = ["x", "y", "z"];
        let mut header: Vec<String> = axes[..self.dim].iter().map(|a| format!("corner_{a}")).collect();
        header.extend(["side", "diam", "dist", "n_q"].iter().map(|s| s.to_string()));
        writeln!(w, "{}", header.join(","))?;
        for c in &self.cells {
            let mut row: Vec<String> = c.cube.corner[..self.dim].iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", c.cube.side));
            row.push(format!("{}", c.diam));
            row.push(format!("{}", c.dist));
            row.push(format!("{}", c.n_q));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Triadic cubes `3^k([-1/2, 1/2)^d + tau)` covering `[-W, W)^d`, each split into `n_Q^d`
/// subcubes with `n_Q` the unique integer with `diam(Q)/n_Q <= (dist(Q)+1)^beta < diam(Q)/(n_Q-1)`.
pub fn build_partition(dim: usize, half_width: f64, beta: f64) -> Result<Partition> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta = {beta} outside [0, 1)")));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension {dim} not in {{2, 3}}")));
    }
    let levels = triadic_levels(half_width)?;
    let mut parents = Vec::new();
    let add = |cube: Cube, level: i32, parents: &mut Vec<(Cube, i32, usize)>| {
        let rho = (cube.dist(dim) + 1.0).powf(beta);
        parents.push((cube, level, subdivision_count(cube.diam(dim), rho)));
    };
    add(Cube { corner: [-0.5, -0.5, if dim == 3 { -0.5 } else { 0.0 }], side: 1.0 }, -1, &mut parents);
    for k in 0..levels as i32 {
        let s = 3f64.powi(k);
        let taus = 3usize.pow(dim as u32);
        for t in 0..taus {
            let mut tau = [0i32; 3];
            let mut rem = t;
            for v in tau.iter_mut().take(dim) {
                *v = (rem % 3) as i32 - 1;
                rem /= 3;
            }
            if tau.iter().all(|&v| v == 0) {
                continue;
            }
            let mut corner = [0.0; 3];
            for a in 0..dim {
                corner[a] = s * (tau[a] as f64 - 0.5);
            }
            add(Cube { corner, side: s }, k, &mut parents);
        }
    }
    Partition::from_parents(dim, beta, half_width, parents, true)
}

/// Verifies `diam D <= (dist D + 1)^beta` on every cell and returns the smallest `C`
/// with `(dist D + 1)^beta <= C diam D`.
pub fn check_refinement(part: &Partition) -> Result<f64> {
    let mut c_meas: f64 = 0.0;
    for (i, c) in part.cells.iter().enumerate() {
        let rho = (c.dist + 1.0).powf(part.beta);
        if c.diam > rho * (1.0 + 1e-12) {
            return Err(Error::Partition(format!("cell {i}: diam {} exceeds (dist + 1)^beta = {rho}", c.diam)));
        }
        c_meas = c_meas.max(rho / c.diam);
    }
    Ok(c_meas)
}
