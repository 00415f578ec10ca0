//! Flat `key = value` run configuration.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::Serialize;

use homlab::elliptic::SolveOptions;
use homlab::ensemble::FieldModel;
use homlab::lattice::Grid;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub dim: usize,
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub skew: f64,
    /// `a = constant * Id` instead of a Gaussian ensemble.
    pub constant: Option<f64>,
    /// Laminate profile along `x_1`, periodically repeated.
    pub laminate: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub delta: f64,
    pub deltas: Option<Vec<f64>>,
    pub t_ladder: Vec<f64>,
    pub radii: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
    pub realizations: usize,
    pub seed: u64,
    pub out: String,
    pub tol: f64,
    pub max_iter: usize,
    pub centers: Option<usize>,
    pub center: Vec<usize>,
    pub half_width: f64,
    pub betas: Option<Vec<f64>>,
    pub interaction_offset: f64,
    pub sens_radius: f64,
    pub sens_step: Option<f64>,
    pub block: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n: 64,
            lambda: 0.25,
            gamma: 2.5,
            skew: 0.0,
            constant: None,
            laminate: None,
            beta: None,
            delta: 1.0 / 16.0,
            deltas: None,
            t_ladder: vec![1.0],
            radii: None,
            sizes: None,
            realizations: 8,
            seed: 0,
            out: "out".into(),
            tol: 1e-9,
            max_iter: 2000,
            centers: None,
            center: vec![0, 0, 0],
            half_width: 40.5,
            betas: None,
            interaction_offset: 0.5,
            sens_radius: 4.0,
            sens_step: None,
            block: 4,
        }
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse '{v}' for key '{key}'"))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|s| scalar(key, s.trim())).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "dim" => self.dim = scalar(key, v)?,
            "n" => self.n = scalar(key, v)?,
            "lambda" => self.lambda = scalar(key, v)?,
            "gamma" => self.gamma = scalar(key, v)?,
            "skew" => self.skew = scalar(key, v)?,
            "constant" => self.constant = Some(scalar(key, v)?),
            "laminate" => self.laminate = Some(list(key, v)?),
            "beta" => self.beta = Some(scalar(key, v)?),
            "delta" => self.delta = scalar(key, v)?,
            "deltas" => self.deltas = Some(list(key, v)?),
            "t_ladder" => self.t_ladder = list(key, v)?,
            "radii" => self.radii = Some(list(key, v)?),
            "sizes" => self.sizes = Some(list(key, v)?),
            "realizations" => self.realizations = scalar(key, v)?,
            "seed" => self.seed = scalar(key, v)?,
            "out" => self.out = v.to_string(),
            "tol" => self.tol = scalar(key, v)?,
            "max_iter" => self.max_iter = scalar(key, v)?,
            "centers" => self.centers = Some(scalar(key, v)?),
            "center" => {
                let c: Vec<usize> = list(key, v)?;
                if c.len() > 3 {
                    return Err("center has at most 3 coordinates".into());
                }
                self.center = c.into_iter().chain(std::iter::repeat(0)).take(3).collect();
            }
            "half_width" => self.half_width = scalar(key, v)?,
            "betas" => self.betas = Some(list(key, v)?),
            "interaction_offset" => self.interaction_offset = scalar(key, v)?,
            "sens_radius" => self.sens_radius = scalar(key, v)?,
            "sens_step" => self.sens_step = Some(scalar(key, v)?),
            "block" => self.block = scalar(key, v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.dim, self.n)?)
    }

    pub fn field(&self) -> FieldModel {
        match self.constant {
            Some(value) => FieldModel::Constant { value },
            None => FieldModel::Gaussian { gamma: self.gamma, lambda: self.lambda, skew: self.skew },
        }
    }

    pub fn solver(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iter: self.max_iter, ..SolveOptions::default() }
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| self.field().beta(self.dim))
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.deltas.clone().unwrap_or_else(|| vec![self.delta])
    }

    /// Flat index of `center` on `grid`.
    pub fn center_index(&self, grid: Grid) -> Result<usize, CliError> {
        let c = &self.center[..grid.dim()];
        if c.iter().any(|&x| x >= grid.n()) {
            return Err(CliError::Config(format!("center {c:?} outside the grid")));
        }
        Ok(grid.index(c))
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        if self.laminate.is_none() {
            self.field().validate(self.dim)?;
        }
        self.solver().validate()?;
        if !(self.delta > 0.0) || self.deltas().iter().any(|d| !(*d > 0.0)) {
            return Err(CliError::Config("delta values must be positive".into()));
        }
        if let Some(p) = &self.laminate {
            if p.is_empty() || p.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                return Err(CliError::Config("laminate entries must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}
