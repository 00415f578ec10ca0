//! Derivatives of linear corrector functionals with respect to the coefficient field,
//! computed by adjoint solves, and their carré-du-champ over a partition.

use serde::{Deserialize, Serialize};

use crate::corrector::CorrectorSet;
use crate::elliptic::{solve_divform, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::lattice::{
    backward_diff, div, forward_diff, grad, poisson_solve, Ball, CoefficientField, Grid, ScalarField, VectorField,
};
use crate::partition::CellPartition;

/// Which corrector component the functional reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `F = sum g . grad phi_i`.
    Phi { i: usize },
    /// `F = sum g . grad sigma_ijk`, `j < k`.
    Sigma { i: usize, j: usize, k: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalSpec {
    pub weight: VectorField,
    pub target: Target,
}

impl FunctionalSpec {
    pub fn new(weight: VectorField, target: Target) -> Result<Self> {
        let d = weight.grid().dim();
        let ok = match target {
            Target::Phi { i } => i < d,
            Target::Sigma { i, j, k } => i < d && j < k && k < d,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("target {target:?} out of range for d = {d}")));
        }
        Ok(Self { weight, target })
    }

    /// `g = m 1_B / |B|`, so `F` is the ball average of the directional derivative; `r <= L/8`.
    pub fn ball(grid: Grid, target: Target, direction: &[f64], center: usize, radius: f64) -> Result<Self> {
        let cap = grid.side_length() / 8.0;
        if radius > cap {
            return Err(Error::BallRadius { radius, max: cap });
        }
        if direction.len() != grid.dim() {
            return Err(Error::ShapeMismatch("direction length differs from the dimension".into()));
        }
        let ball = Ball::new(grid, center, radius)?;
        let w = 1.0 / ball.len() as f64;
        let mut weight = VectorField::zeros(grid);
        for c in ball.cells() {
            for (m, &dm) in direction.iter().enumerate() {
                weight.component_mut(m)[c] = dm * w;
            }
        }
        Self::new(weight, target)
    }

    fn direction(&self) -> usize {
        match self.target {
            Target::Phi { i } | Target::Sigma { i, .. } => i,
        }
    }
}

fn pair(g: &VectorField, u: &ScalarField) -> f64 {
    g.inner(&grad(u))
}

/// `F` evaluated on a computed corrector set.
pub fn functional_value(corr: &CorrectorSet, spec: &FunctionalSpec) -> Result<f64> {
    if spec.weight.grid() != corr.grid() {
        return Err(Error::ShapeMismatch("functional weight and corrector on different grids".into()));
    }
    Ok(match spec.target {
        Target::Phi { i } => pair(&spec.weight, &corr.phi[i]),
        Target::Sigma { i, j, k } => {
            pair(&spec.weight, &ScalarField::from_vec(corr.grid(), corr.sigma.upper(i, j, k).to_vec())?)
        }
    })
}

/// `dF/da` as a matrix field (entry `(m, n)` at `x`), plus the adjoint solutions used.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    pub field: CoefficientField,
    /// Solves `-div(a^T grad v) = div g` (phi-functional).
    pub v_tilde: Option<ScalarField>,
    /// Solves `-Lap v = div g` (sigma-functional).
    pub v_bar: Option<ScalarField>,
    /// Solves `-div(a^T grad v) = div(a^T w)` with `w = D_j^- v_bar e_k - D_k^- v_bar e_j`.
    pub v_hat: Option<ScalarField>,
    pub reports: Vec<SolveReport>,
}

/// Rank-one field `u (x) (grad phi_i + e_i)`.
fn outer_with_gradient(u: &VectorField, phi: &ScalarField, i: usize) -> Result<CoefficientField> {
    let grid = phi.grid();
    let d = grid.dim();
    let mut g = grad(phi);
    g.component_mut(i).iter_mut().for_each(|v| *v += 1.0);
    let mut entries = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            entries.push(u.component(m).iter().zip(g.component(n)).map(|(a, b)| a * b).collect());
        }
    }
    CoefficientField::from_entries(grid, entries)
}

/// Adjoint representation of the first variation of `F` with respect to `a`.
pub fn malliavin_derivative(
    a: &CoefficientField,
    corr: &CorrectorSet,
    spec: &FunctionalSpec,
    opts: &SolveOptions,
) -> Result<DerivativeField> {
    let grid = a.grid();
    if corr.grid() != grid || spec.weight.grid() != grid {
        return Err(Error::ShapeMismatch("coefficient, corrector and weight on different grids".into()));
    }
    if let Some(r) = corr.reports.iter().find(|r| !r.converged) {
        return Err(Error::NotConverged { iterations: r.iterations, residual: r.residual });
    }
    let at = a.transposed();
    let i = spec.direction();
    match spec.target {
        Target::Phi { .. } => {
            let (v, rep) = solve_divform(&at, &spec.weight, 0.0, opts)?;
            rep.check()?;
            let field = outer_with_gradient(&grad(&v), &corr.phi[i], i)?;
            Ok(DerivativeField { field, v_tilde: Some(v), v_bar: None, v_hat: None, reports: vec![rep] })
        }
        Target::Sigma { j, k, .. } => {
            let v_bar = poisson_solve(&div(&spec.weight));
            let w = sigma_dual_field(&v_bar, j, k);
            let (v_hat, rep) = solve_divform(&at, &at.apply(&w), 0.0, opts)?;
            rep.check()?;
            let mut u = grad(&v_hat);
            for m in 0..grid.dim() {
                for (x, y) in u.component_mut(m).iter_mut().zip(w.component(m)) {
                    *x += y;
                }
            }
            let field = outer_with_gradient(&u, &corr.phi[i], i)?;
            Ok(DerivativeField { field, v_tilde: None, v_bar: Some(v_bar), v_hat: Some(v_hat), reports: vec![rep] })
        }
    }
}

/// `w = D_j^- v e_k - D_k^- v e_j`.
fn sigma_dual_field(v: &ScalarField, j: usize, k: usize) -> VectorField {
    let grid = v.grid();
    let mut w = VectorField::zeros(grid);
    backward_diff(&grid, v.data(), j, w.component_mut(k));
    backward_diff(&grid, v.data(), k, w.component_mut(j));
    w.component_mut(j).iter_mut().for_each(|x| *x = -*x);
    w
}

/// `sum_x dF/da(x) : delta_a(x)` (unit cell volume).
pub fn pairing(deriv: &DerivativeField, delta_a: &CoefficientField) -> Result<f64> {
    if deriv.field.grid() != delta_a.grid() {
        return Err(Error::ShapeMismatch("derivative and perturbation on different grids".into()));
    }
    Ok(deriv
        .field
        .entries()
        .iter()
        .zip(delta_a.entries())
        .map(|(f, g)| f.iter().zip(g).map(|(x, y)| x * y).sum::<f64>())
        .sum())
}

/// `direction` (row-major `d x d`) on `cells`, zero elsewhere.
pub fn local_perturbation(grid: Grid, cells: &[usize], direction: &[f64]) -> Result<CoefficientField> {
    let d = grid.dim();
    if direction.len() != d * d {
        return Err(Error::ShapeMismatch("perturbation direction must have d*d entries".into()));
    }
    let mut entries = vec![vec![0.0; grid.len()]; d * d];
    for &c in cells {
        for (e, &v) in entries.iter_mut().zip(direction) {
            e[c] += v;
        }
    }
    CoefficientField::from_entries(grid, entries)
}

fn add_scaled(a: &CoefficientField, t: f64, delta: &CoefficientField) -> Result<CoefficientField> {
    let entries = a
        .entries()
        .iter()
        .zip(delta.entries())
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + t * q).collect())
        .collect();
    CoefficientField::from_entries(a.grid(), entries)
}

/// `F` read off the variation `(psi, q_t - q)` of `(phi_i, q_i)`.
fn functional_of_variation(spec: &FunctionalSpec, psi: &ScalarField, dq: &VectorField) -> Result<f64> {
    match spec.target {
        Target::Phi { .. } => Ok(pair(&spec.weight, psi)),
        Target::Sigma { j, k, .. } => {
            let grid = psi.grid();
            let mut src = vec![0.0; grid.len()];
            let mut t = vec![0.0; grid.len()];
            forward_diff(&grid, dq.component(k), j, &mut src);
            forward_diff(&grid, dq.component(j), k, &mut t);
            src.iter_mut().zip(&t).for_each(|(s, x)| *s -= x);
            let ds = poisson_solve(&ScalarField::from_vec(grid, src)?);
            Ok(pair(&spec.weight, &ds))
        }
    }
}

/// `F(a + t delta_a) - F(a)` without linearization. The perturbed corrector is `phi_i + psi`
/// with `-div((a + t delta_a) grad psi) = div(t delta_a (grad phi_i + e_i))`, which is solved
/// for `psi` directly so that the difference keeps full relative precision.
pub fn perturbation_difference(
    a: &CoefficientField,
    corr: &CorrectorSet,
    spec: &FunctionalSpec,
    delta_a: &CoefficientField,
    t: f64,
    opts: &SolveOptions,
) -> Result<f64> {
    let i = spec.direction();
    let grid = a.grid();
    let at = add_scaled(a, t, delta_a)?;
    let mut base = grad(&corr.phi[i]);
    base.component_mut(i).iter_mut().for_each(|v| *v += 1.0);
    let mut src = delta_a.apply(&base);
    for m in 0..grid.dim() {
        src.component_mut(m).iter_mut().for_each(|v| *v *= t);
    }
    let (psi, rep) = solve_divform(&at, &src, 0.0, opts)?;
    rep.check()?;
    // q_t - q = t delta_a (grad phi + e) + (a + t delta_a) grad psi, up to a constant
    let mut dq = at.apply(&grad(&psi));
    for m in 0..grid.dim() {
        for (x, y) in dq.component_mut(m).iter_mut().zip(src.component(m)) {
            *x += y;
        }
    }
    functional_of_variation(spec, &psi, &dq)
}

/// First variation of `F` along `delta_a` from the linearized corrector equation
/// `-div(a grad dphi) = div(delta_a (grad phi_i + e_i))`.
pub fn tangent_derivative(
    a: &CoefficientField,
    corr: &CorrectorSet,
    spec: &FunctionalSpec,
    delta_a: &CoefficientField,
    opts: &SolveOptions,
) -> Result<f64> {
    let i = spec.direction();
    let grid = a.grid();
    let mut base = grad(&corr.phi[i]);
    base.component_mut(i).iter_mut().for_each(|v| *v += 1.0);
    let src = delta_a.apply(&base);
    let (dphi, rep) = solve_divform(a, &src, 0.0, opts)?;
    rep.check()?;
    let mut dq = a.apply(&grad(&dphi));
    for m in 0..grid.dim() {
        for (x, y) in dq.component_mut(m).iter_mut().zip(src.component(m)) {
            *x += y;
        }
    }
    functional_of_variation(spec, &dphi, &dq)
}

/// Finite differences against the adjoint derivative for a perturbation `t delta_a` on `cells`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub t: f64,
    pub adjoint: f64,
    /// Forward difference quotients at `t` and `t/2`.
    pub fd: [f64; 2],
    /// Relative errors of the two quotients.
    pub relative_error: [f64; 2],
    /// `2 FD(t/2) - FD(t)` and its relative error.
    pub richardson: f64,
    pub richardson_error: f64,
}

impl FdCheck {
    /// Default amplitude `1e-4 lambda`.
    pub fn default_step(lambda: f64) -> f64 {
        1e-4 * lambda
    }

    /// `relative_error[1] / relative_error[0]`, close to 1/2 for an `O(t)` remainder.
    pub fn halving_ratio(&self) -> f64 {
        self.relative_error[1] / self.relative_error[0]
    }
}

pub fn fd_check(
    a: &CoefficientField,
    spec: &FunctionalSpec,
    cells: &[usize],
    direction: &[f64],
    t: f64,
    opts: &SolveOptions,
) -> Result<FdCheck> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("step t = {t} must be positive")));
    }
    let corr = CorrectorSet::compute(a, opts)?;
    let delta = local_perturbation(a.grid(), cells, direction)?;
    let deriv = malliavin_derivative(a, &corr, spec, opts)?;
    let adjoint = pairing(&deriv, &delta)?;
    let fd1 = perturbation_difference(a, &corr, spec, &delta, t, opts)? / t;
    let fd2 = perturbation_difference(a, &corr, spec, &delta, 0.5 * t, opts)? / (0.5 * t);
    let rel = |x: f64| (x - adjoint).abs() / adjoint.abs();
    let richardson = 2.0 * fd2 - fd1;
    Ok(FdCheck {
        t,
        adjoint,
        fd: [fd1, fd2],
        relative_error: [rel(fd1), rel(fd2)],
        richardson,
        richardson_error: rel(richardson),
    })
}

/// `sum_D (sum_{x in D} |dF/da(x)|_1)^2` with the entrywise l1 matrix norm.
pub fn carre_du_champ(deriv: &DerivativeField, part: &CellPartition) -> Result<f64> {
    let grid = deriv.field.grid();
    if part.grid() != grid {
        return Err(Error::ShapeMismatch("derivative and partition on different grids".into()));
    }
    let mut per_block = vec![0.0; part.blocks()];
    for (x, &b) in part.block_of().iter().enumerate() {
        per_block[b] += deriv.field.entries().iter().map(|e| e[x].abs()).sum::<f64>();
    }
    Ok(per_block.iter().map(|s| s * s).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomfield::{sample_coefficients, CoefficientModel, CovarianceSpec, SeedSpec};

    fn tight() -> SolveOptions {
        SolveOptions::with_tol(1e-12)
    }

    fn random_a(n: usize, seed: u64) -> CoefficientField {
        let g = Grid::new(2, n).unwrap();
        let cov = CovarianceSpec::new(2.5, 2).unwrap();
        let model = CoefficientModel::new(0.25, 0.0).unwrap();
        sample_coefficients(g, &cov, &model, SeedSpec::new(seed, 0)).unwrap().field
    }

    #[test]
    fn constant_coefficients_match_constant_solve() {
        let g = Grid::new(2, 32).unwrap();
        let a = CoefficientField::scalar_constant(g, 0.5);
        let corr = CorrectorSet::compute(&a, &tight()).unwrap();
        let spec = FunctionalSpec::ball(g, Target::Phi { i: 0 }, &[1.0, 0.0], 0, 3.0).unwrap();
        let d = malliavin_derivative(&a, &corr, &spec, &tight()).unwrap();
        let (v, _) = solve_divform(&a, &spec.weight, 0.0, &tight()).unwrap();
        let gv = grad(&v);
        for m in 0..2 {
            for n in 0..2 {
                let expect: Vec<f64> = gv.component(m).iter().map(|x| if n == 0 { *x } else { 0.0 }).collect();
                let err = d.field.entry(m, n).iter().zip(&expect).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(err < 1e-12, "({m},{n}) {err}");
            }
        }
    }

    #[test]
    fn zero_weight_gives_zero_derivative() {
        let a = random_a(32, 1);
        let corr = CorrectorSet::compute(&a, &tight()).unwrap();
        let spec = FunctionalSpec::new(VectorField::zeros(a.grid()), Target::Sigma { i: 1, j: 0, k: 1 }).unwrap();
        let d = malliavin_derivative(&a, &corr, &spec, &tight()).unwrap();
        assert!(d.field.entries().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn fd_on_constant_coefficients() {
        let g = Grid::new(2, 32).unwrap();
        let a = CoefficientField::scalar_constant(g, 0.5);
        let spec = FunctionalSpec::ball(g, Target::Phi { i: 0 }, &[1.0, 0.0], 0, 3.0).unwrap();
        let cell = g.index(&[1, 0]);
        let chk = fd_check(&a, &spec, &[cell], &[1.0, 0.0, 0.0, 0.0], 1e-5, &tight()).unwrap();
        assert!(chk.relative_error[0] <= 1e-4, "{chk:?}");
        assert!((chk.halving_ratio() - 0.5).abs() < 0.1, "{chk:?}");
        assert!(chk.richardson_error < 0.1 * chk.relative_error[0], "{chk:?}");
    }

    #[test]
    fn fd_with_skew_perturbation_and_sigma_target() {
        let a = random_a(32, 2);
        let g = a.grid();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cell = g.index(&[1, 1]);
        for target in [Target::Phi { i: 0 }, Target::Sigma { i: 0, j: 0, k: 1 }] {
            let spec = FunctionalSpec::ball(g, target, &[s, s], 0, 4.0).unwrap();
            for dir in [[1.0, 0.0, 0.0, 0.0], [0.0, -s, s, 0.0]] {
                let chk = fd_check(&a, &spec, &[cell], &dir, 2.5e-5, &tight()).unwrap();
                assert!(chk.relative_error[0] <= 1e-4, "{target:?} {dir:?}: {chk:?}");
                assert!((chk.halving_ratio() - 0.5).abs() < 0.1, "{target:?} {dir:?}: {chk:?}");
            }
        }
    }

    #[test]
    fn adjoint_matches_tangent_solve() {
        let a = random_a(32, 3);
        let g = a.grid();
        let corr = CorrectorSet::compute(&a, &tight()).unwrap();
        let delta = {
            let f = random_a(32, 4);
            let mut e = f.entries().to_vec();
            // non-symmetric perturbation everywhere
            e[1] = e[0].iter().map(|v| 0.3 * v).collect();
            CoefficientField::from_entries(g, e).unwrap()
        };
        for target in [Target::Phi { i: 1 }, Target::Sigma { i: 1, j: 0, k: 1 }] {
            let spec = FunctionalSpec::ball(g, target, &[0.0, 1.0], 5, 4.0).unwrap();
            let d = malliavin_derivative(&a, &corr, &spec, &tight()).unwrap();
            let adj = pairing(&d, &delta).unwrap();
            let tan = tangent_derivative(&a, &corr, &spec, &delta, &tight()).unwrap();
            assert!((adj - tan).abs() <= 1e-9 * adj.abs().max(1e-12), "{target:?}: {adj} {tan}");
        }
    }

    #[test]
    fn carre_du_champ_partition_properties() {
        let a = random_a(32, 5);
        let g = a.grid();
        let corr = CorrectorSet::compute(&a, &tight()).unwrap();
        let spec = FunctionalSpec::ball(g, Target::Phi { i: 0 }, &[1.0, 0.0], 0, 4.0).unwrap();
        let d = malliavin_derivative(&a, &corr, &spec, &tight()).unwrap();
        let total: f64 = d.field.entries().iter().flatten().map(|v| v.abs()).sum();
        let single = carre_du_champ(&d, &CellPartition::single(g)).unwrap();
        assert!((single - total * total).abs() <= 1e-12 * single);
        let fine = CellPartition::uniform(g, 4).unwrap();
        let mut part = fine.clone();
        let mut prev = carre_du_champ(&d, &part).unwrap();
        assert!(prev > 0.0);
        while part.blocks() > 1 {
            part = part.merge(0, part.blocks() - 1).unwrap();
            let v = carre_du_champ(&d, &part).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!((prev - single).abs() <= 1e-12 * single);
        let zero = DerivativeField {
            field: CoefficientField::from_entries(g, vec![vec![0.0; g.len()]; 4]).unwrap(),
            v_tilde: None,
            v_bar: None,
            v_hat: None,
            reports: vec![],
        };
        assert_eq!(carre_du_champ(&zero, &fine).unwrap(), 0.0);
    }

    #[test]
    fn functional_spec_validation() {
        let g = Grid::new(2, 32).unwrap();
        assert!(FunctionalSpec::ball(g, Target::Phi { i: 2 }, &[1.0, 0.0], 0, 2.0).is_err());
        assert!(FunctionalSpec::ball(g, Target::Sigma { i: 0, j: 1, k: 0 }, &[1.0, 0.0], 0, 2.0).is_err());
        assert!(FunctionalSpec::ball(g, Target::Phi { i: 0 }, &[1.0, 0.0], 0, 5.0).is_err());
    }
}
