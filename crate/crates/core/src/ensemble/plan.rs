use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Regime;
use crate::elliptic::SolveOptions;
use crate::error::{Error, Result};
use crate::lattice::{CoefficientField, Grid};
use crate::randomfield::{sample_coefficients, CoefficientModel, CovarianceSpec, SeedSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Fluctuations of ball averages of `grad phi` against `r`.
    Scaling,
    /// Centered ball variance of `(phi, sigma)` against `R`.
    Growth,
    /// Minimal radius samples and their stretched-exponential tail.
    Tail,
    /// Corrector-augmented two-scale error against the macroscopic scale `N`.
    Twoscale,
    /// Excess decay of `a`-harmonic functions with quadratic boundary data.
    Excess,
    /// Building blocks `F_{R,T}` of the modified correctors.
    Fblock,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Scaling,
        ExperimentKind::Growth,
        ExperimentKind::Tail,
        ExperimentKind::Twoscale,
        ExperimentKind::Excess,
        ExperimentKind::Fblock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Growth => "growth",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Twoscale => "twoscale",
            ExperimentKind::Excess => "excess",
            ExperimentKind::Fblock => "fblock",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment kind '{s}'")))
    }
}

/// Where the coefficient realizations come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FieldModel {
    Gaussian { gamma: f64, lambda: f64, skew: f64 },
    /// `a = value * Id` for every realization.
    Constant { value: f64 },
}

impl FieldModel {
    pub fn beta(&self, dim: usize) -> f64 {
        match self {
            FieldModel::Gaussian { gamma, .. } => CovarianceSpec::beta_eff(*gamma, dim),
            FieldModel::Constant { .. } => 0.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            FieldModel::Gaussian { gamma, lambda, skew } => {
                CovarianceSpec::new(gamma, dim)?;
                CoefficientModel::new(lambda, skew)?;
            }
            FieldModel::Constant { value } => {
                if !(value > 0.0 && value <= 1.0) {
                    return Err(Error::InvalidParameter(format!("constant coefficient {value} outside (0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Realization `seed` on `grid`.
    pub fn sample(&self, grid: Grid, seed: SeedSpec) -> Result<CoefficientField> {
        match *self {
            FieldModel::Gaussian { gamma, lambda, skew } => {
                let cov = CovarianceSpec::new(gamma, grid.dim())?;
                let model = CoefficientModel::new(lambda, skew)?;
                Ok(sample_coefficients(grid, &cov, &model, seed)?.field)
            }
            FieldModel::Constant { value } => Ok(CoefficientField::scalar_constant(grid, value)),
        }
    }
}

/// Everything an ensemble run depends on. `radii` are ball radii for scaling, growth,
/// excess and fblock; `sizes` is the `N` ladder of the two-scale experiment; `t_factors`
/// sets `T = R t` for fblock; `deltas` are the minimal-radius thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub n: usize,
    pub field: FieldModel,
    pub realizations: usize,
    pub radii: Vec<f64>,
    pub sizes: Vec<usize>,
    pub t_factors: Vec<f64>,
    pub deltas: Vec<f64>,
    pub centers: usize,
    pub master_seed: u64,
    pub solver: SolveOptions,
}

impl ExperimentPlan {
    /// Defaults for `kind`: dyadic radii up to `L/8`, one center, `delta = 1/16`.
    pub fn new(kind: ExperimentKind, dim: usize, n: usize, field: FieldModel, realizations: usize, master_seed: u64) -> Self {
        let radii = Grid::new(dim, n).map(|g| g.dyadic_radii()).unwrap_or_default();
        Self {
            kind,
            dim,
            n,
            field,
            realizations,
            radii,
            sizes: vec![n],
            t_factors: vec![1.0],
            deltas: vec![1.0 / 16.0],
            centers: if kind == ExperimentKind::Growth { 16 } else { 1 },
            master_seed,
            solver: SolveOptions::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n)
    }

    pub fn beta(&self) -> f64 {
        self.field.beta(self.dim)
    }

    pub fn regime(&self) -> Regime {
        Regime::classify(self.dim, self.beta())
    }

    pub fn seed(&self, index: usize) -> SeedSpec {
        SeedSpec::new(self.master_seed, index as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations < 8 {
            return Err(Error::InvalidParameter(format!("need at least 8 realizations, got {}", self.realizations)));
        }
        self.validate_ladders()
    }

    /// Everything except the realization count.
    pub fn validate_ladders(&self) -> Result<()> {
        let grid = self.grid()?;
        self.field.validate(self.dim)?;
        self.solver.validate()?;
        let cap = grid.side_length() / 8.0;
        let needs_radii = !matches!(self.kind, ExperimentKind::Tail | ExperimentKind::Twoscale);
        if needs_radii && self.radii.is_empty() {
            return Err(Error::InvalidParameter(format!("{} needs a radius ladder", self.kind)));
        }
        for &r in &self.radii {
            if !(r >= 1.0 && r <= cap) {
                return Err(Error::BallRadius { radius: r, max: cap });
            }
        }
        if self.centers == 0 {
            return Err(Error::InvalidParameter("need at least one center".into()));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidParameter("deltas must be a non-empty list of positive values".into()));
        }
        match self.kind {
            ExperimentKind::Growth if self.centers < 16 => {
                return Err(Error::InvalidParameter("growth needs at least 16 centers".into()));
            }
            ExperimentKind::Twoscale => {
                if self.sizes.len() < 2 {
                    return Err(Error::InvalidParameter("twoscale needs at least two sizes".into()));
                }
                for &n in &self.sizes {
                    Grid::new(self.dim, n)?;
                }
            }
            ExperimentKind::Fblock => {
                if self.t_factors.is_empty() {
                    return Err(Error::InvalidParameter("fblock needs at least one T factor".into()));
                }
                for &r in &self.radii {
                    for &t in &self.t_factors {
                        let tt = r * t;
                        if !(tt >= 1.0 && tt.sqrt() <= r) {
                            return Err(Error::InvalidParameter(format!("T = {tt} at R = {r} violates 1 <= T <= R^2")));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One measured functional. `param` is the radius (or `N`, or `delta`); `param2` the cut-off `T` where relevant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub functional: String,
    pub center: usize,
    pub param: f64,
    pub param2: f64,
    pub value: f64,
}

impl Measurement {
    pub fn new(functional: &str, center: usize, param: f64, value: f64) -> Self {
        Self { functional: functional.to_string(), center, param, param2: 0.0, value }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub index: usize,
    pub master_seed: u64,
    pub measurements: Vec<Measurement>,
    pub failure: Option<String>,
}

impl ExperimentRecord {
    /// Values of `functional` with their `param`, in recorded order.
    pub fn values(&self, functional: &str) -> Vec<(f64, f64)> {
        self.measurements.iter().filter(|m| m.functional == functional).map(|m| (m.param, m.value)).collect()
    }
}
