use super::{Cube, ParentCube, Partition};
#[cfg(test)]
use super::cube_distance;
use crate::error::{Error, Result};
use crate::par;

const LEAF: usize = 16;

fn kernel(gamma: f64, r: f64) -> f64 {
    (-gamma * r.ln_1p()).exp()
}

/// A box of subcubes `[lo, hi)` of one parent lattice.
#[derive(Clone, Copy)]
struct Node {
    parent: usize,
    lo: [usize; 3],
    hi: [usize; 3],
}

struct Geometry<'a> {
    dim: usize,
    gamma: f64,
    parents: &'a [ParentCube],
}

impl Geometry<'_> {
    fn sub_side(&self, q: usize) -> f64 {
        self.parents[q].cube.side / self.parents[q].n as f64
    }

    /// Diagonal of the node's box and its number of cells.
    fn extent(&self, node: &Node) -> (f64, usize) {
        let s = self.sub_side(node.parent);
        let mut diag2 = 0.0;
        let mut count = 1usize;
        for a in 0..self.dim {
            let w = node.hi[a] - node.lo[a];
            diag2 += (w as f64 * s).powi(2);
            count *= w;
        }
        (diag2.sqrt(), count)
    }

    /// Distance from `d` to the node's box.
    fn node_dist(&self, d: &Cube, node: &Node) -> f64 {
        let q = &self.parents[node.parent];
        let s = self.sub_side(node.parent);
        (0..self.dim)
            .map(|a| {
                let lo = q.cube.corner[a] + node.lo[a] as f64 * s;
                let hi = q.cube.corner[a] + node.hi[a] as f64 * s;
                let gap = (d.corner[a] - hi).max(lo - (d.corner[a] + d.side)).max(0.0);
                gap * gap
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Per-axis gaps between `d` and the lattice columns `lo..hi` of parent `q`.
    fn gaps(&self, d: &Cube, node: &Node, axis: usize) -> Vec<f64> {
        let q = &self.parents[node.parent];
        let s = self.sub_side(node.parent);
        (node.lo[axis]..node.hi[axis])
            .map(|i| {
                let lo = q.cube.corner[axis] + i as f64 * s;
                (d.corner[axis] - (lo + s)).max(lo - (d.corner[axis] + d.side)).max(0.0)
            })
            .collect()
    }

    fn exact_node(&self, d: &Cube, node: &Node) -> f64 {
        let gx = self.gaps(d, node, 0);
        let gy = self.gaps(d, node, 1);
        let g = self.gamma;
        let mut s = 0.0;
        if self.dim == 2 {
            for x in &gx {
                let x2 = x * x;
                for y in &gy {
                    s += kernel(g, (x2 + y * y).sqrt());
                }
            }
        } else {
            let gz = self.gaps(d, node, 2);
            for x in &gx {
                for y in &gy {
                    let xy = x * x + y * y;
                    for z in &gz {
                        s += kernel(g, (xy + z * z).sqrt());
                    }
                }
            }
        }
        s
    }

    fn root(&self, q: usize) -> Node {
        let n = self.parents[q].n;
        let mut hi = [1; 3];
        for v in hi.iter_mut().take(self.dim) {
            *v = n;
        }
        Node { parent: q, lo: [0; 3], hi }
    }

    /// Upper bound of the node's contribution: exact near `d`, `count * Gamma(dist(d, box))`
    /// once the box is `kappa` diameters away.
    fn bound_node(&self, d: &Cube, node: &Node, kappa: f64) -> f64 {
        let (diag, count) = self.extent(node);
        if count <= LEAF {
            return self.exact_node(d, node);
        }
        let dist = self.node_dist(d, node);
        if dist >= kappa * diag {
            return count as f64 * kernel(self.gamma, dist);
        }
        let axis = (0..self.dim).max_by_key(|&a| node.hi[a] - node.lo[a]).unwrap_or(0);
        let mid = (node.lo[axis] + node.hi[axis]) / 2;
        let mut left = *node;
        let mut right = *node;
        left.hi[axis] = mid;
        right.lo[axis] = mid;
        self.bound_node(d, &left, kappa) + self.bound_node(d, &right, kappa)
    }

    fn exact(&self, d: &Cube) -> f64 {
        (0..self.parents.len()).map(|q| self.exact_node(d, &self.root(q))).sum()
    }

    fn bound(&self, d: &Cube, kappa: f64) -> f64 {
        (0..self.parents.len()).map(|q| self.bound_node(d, &self.root(q), kappa)).sum()
    }
}

/// `sup_D sum_{D'} (1 + dist(D, D'))^{-gamma}` over the cells of `part`.
///
/// Exact: candidates are screened with upper bounds that lump far-away blocks of cells
/// at their nearest distance, and every candidate whose bound exceeds the running
/// maximum is evaluated cell by cell. For symmetric partitions only one representative
/// per orbit of the hyperoctahedral group is considered.
pub fn interaction_sum(part: &Partition, gamma: f64) -> Result<f64> {
    let d = part.dim;
    let threshold = d as f64 * (1.0 - part.beta);
    if !(gamma > threshold) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must exceed d(1 - beta) = {threshold}")));
    }
    if part.cells.is_empty() {
        return Err(Error::Partition("empty partition".into()));
    }
    let geo = Geometry { dim: d, gamma, parents: &part.parents };
    let mut candidates: Vec<usize> = (0..part.cells.len())
        .filter(|&i| {
            if !part.symmetric {
                return true;
            }
            let c = &part.cells[i].cube;
            let center: Vec<f64> = (0..d).map(|a| c.corner[a] + 0.5 * c.side).collect();
            center[d - 1] >= -1e-12 && center.windows(2).all(|w| w[0] >= w[1] - 1e-12)
        })
        .collect();
    candidates.sort_by(|&a, &b| part.cells[a].dist.total_cmp(&part.cells[b].dist).then(a.cmp(&b)));

    let seeds = candidates.len().min(8);
    let seeded = par::map_range(seeds, |k| geo.exact(&part.cells[candidates[k]].cube));
    let mut best = seeded.iter().copied().fold(0.0, f64::max);
    let rest = &candidates[seeds..];

    let mut survivors: Vec<(f64, usize)> = rest.iter().map(|&i| (f64::INFINITY, i)).collect();
    for kappa in [2.0, 8.0] {
        let bounds = par::map_range(survivors.len(), |k| geo.bound(&part.cells[survivors[k].1].cube, kappa));
        survivors = bounds.into_iter().zip(survivors.iter()).filter(|(u, _)| *u > best).map(|(u, s)| (u, s.1)).collect();
    }
    survivors.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    // decreasing bounds: evaluate in batches and stop once no bound beats the running maximum
    for chunk in survivors.chunks(32) {
        let todo: Vec<usize> = chunk.iter().filter(|(u, _)| *u > best).map(|&(_, i)| i).collect();
        if todo.is_empty() {
            break;
        }
        let vals = par::map_range(todo.len(), |k| geo.exact(&part.cells[todo[k]].cube));
        best = vals.into_iter().fold(best, f64::max);
    }
    Ok(best)
}

/// Direct `O(n^2)` evaluation, for cross-checking.
#[cfg(test)]
pub(crate) fn interaction_sum_direct(part: &Partition, gamma: f64) -> f64 {
    part.cells
        .iter()
        .map(|a| part.cells.iter().map(|b| kernel(gamma, cube_distance(part.dim, &a.cube, &b.cube))).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::build_partition;

    #[test]
    fn single_cell_is_one() {
        let c = Cube { corner: [0.0; 3], side: 1.0 };
        let p = Partition::from_parents(2, 0.0, 0.5, vec![(c, -1, 1)], false).unwrap();
        assert_eq!(interaction_sum(&p, 2.5).unwrap(), 1.0);
    }

    #[test]
    fn matches_direct_evaluation() {
        for (dim, w, beta, gamma) in [(2, 13.5, 0.0, 2.5), (2, 40.5, 0.3, 1.9), (3, 4.5, 0.0, 3.5), (3, 13.5, 0.6, 1.7)] {
            let p = build_partition(dim, w, beta).unwrap();
            let fast = interaction_sum(&p, gamma).unwrap();
            let direct = interaction_sum_direct(&p, gamma);
            assert!((fast - direct).abs() <= 1e-12 * direct, "{dim} {w} {beta}: {fast} vs {direct}");
        }
    }

    #[test]
    fn non_symmetric_partition_uses_all_cells() {
        let c = Cube { corner: [0.0; 3], side: 4.0 };
        let p = Partition::from_parents(2, 0.0, 2.0, vec![(c, 0, 7)], false).unwrap();
        let fast = interaction_sum(&p, 2.5).unwrap();
        assert!((fast - interaction_sum_direct(&p, 2.5)).abs() < 1e-12 * fast);
    }

    #[test]
    fn monotone_in_gamma() {
        let p = build_partition(2, 13.5, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for gamma in [2.05, 2.5, 3.0, 4.0] {
            let v = interaction_sum(&p, gamma).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_non_integrable_gamma() {
        let p = build_partition(2, 4.5, 0.0).unwrap();
        assert!(interaction_sum(&p, 2.0).is_err());
        let p = build_partition(2, 4.5, 0.5).unwrap();
        assert!(interaction_sum(&p, 1.01).is_ok());
    }
}
