use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use homlab::corrector::CorrectorSet;
use homlab::diagnostics::{
    energy_profile, gradient_average, gram_matrix, growth_profile, minimal_radius, spread_centers,
};
use homlab::ensemble::{analyze, run_ensemble, write_records_csv, ExperimentKind, ExperimentPlan};
use homlab::lattice::io::save_coefficients;
use homlab::lattice::{Ball, CoefficientField, Grid};
use homlab::partition::{build_partition, check_refinement, interaction_sum, CellPartition};
use homlab::randomfield::{
    empirical_covariance, kernel, skew_generator, CovarianceSpec, GaussianSampler, SeedSpec,
};
use homlab::sensitivity::{carre_du_champ, fd_check, malliavin_derivative, FdCheck, FunctionalSpec, Target};

use crate::config::RunConfig;
use crate::error::CliError;

pub type Outcome = Result<Vec<String>, CliError>;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn realization(cfg: &RunConfig, grid: Grid, index: usize) -> Result<CoefficientField, CliError> {
    match &cfg.laminate {
        Some(p) => Ok(CoefficientField::laminate(grid, p)?),
        None => Ok(cfg.field().sample(grid, SeedSpec::new(cfg.seed, index as u64))?),
    }
}

/// Coefficient files for `realizations` draws and, for Gaussian models, the empirical covariance.
pub fn sample(cfg: &RunConfig, out: &Path) -> Outcome {
    let grid = cfg.grid()?;
    let mut files = Vec::new();
    for i in 0..cfg.realizations {
        let name = format!("coefficients_{i:04}.bin");
        save_coefficients(&out.join(&name), &realization(cfg, grid, i)?)?;
        files.push(name);
    }
    if cfg.constant.is_none() && cfg.laminate.is_none() && cfg.realizations >= 2 {
        let cov = CovarianceSpec::new(cfg.gamma, cfg.dim)?;
        let sampler = GaussianSampler::new(&cov, grid)?;
        let fields: Vec<_> =
            (0..cfg.realizations).map(|i| sampler.sample(SeedSpec::new(cfg.seed, i as u64))).collect();
        let prof = empirical_covariance(&fields)?;
        let mut w = BufWriter::new(File::create(out.join("covariance.csv"))?);
        let deficit = sampler.zero_mode_deficit();
        writeln!(w, "r,c,c_plus_deficit,stderr,target")?;
        for k in 0..prof.r.len() {
            let (r, c) = (prof.r[k], prof.c[k]);
            writeln!(w, "{r},{c},{},{},{}", c + deficit, prof.stderr[k], kernel(cfg.gamma, r))?;
        }
        w.flush()?;
        files.push("covariance.csv".into());
    }
    Ok(files)
}

/// Corrector set of realization 0 with its summary.
pub fn corrector(cfg: &RunConfig, out: &Path) -> Outcome {
    let grid = cfg.grid()?;
    let a = realization(cfg, grid, 0)?;
    let corr = CorrectorSet::compute(&a, &cfg.solver())?;
    corr.save(&out.join("corrector"))?;
    Ok(vec!["corrector/summary.json".into()])
}

/// Regularity diagnostics of realization 0 around `center`.
pub fn diagnose(cfg: &RunConfig, out: &Path) -> Outcome {
    let grid = cfg.grid()?;
    let center = cfg.center_index(grid)?;
    let a = realization(cfg, grid, 0)?;
    let corr = CorrectorSet::compute(&a, &cfg.solver())?;
    let radii = cfg.radii.clone().unwrap_or_else(|| grid.dyadic_radii());
    let r_star: Vec<Value> = cfg
        .deltas()
        .iter()
        .map(|&d| minimal_radius(&corr, d, center).map(|m| json!({ "delta": d, "r_star": m.r_star, "values": m.values })))
        .collect::<Result<_, _>>()?;
    let growth = growth_profile(&corr, &radii, &spread_centers(grid, cfg.centers.unwrap_or(16)), cfg.beta())?;
    let mut e1 = vec![0.0; grid.dim()];
    e1[0] = 1.0;
    let averages: Vec<Value> = radii
        .iter()
        .map(|&r| gradient_average(&corr, &e1, r, center).map(|g| json!({ "radius": r, "phi": g.phi, "sigma": g.sigma })))
        .collect::<Result<_, _>>()?;
    let gram: Vec<Value> = radii
        .iter()
        .map(|&r| -> Result<Value, CliError> {
            let (_, ev) = gram_matrix(&corr, &Ball::new(grid, center, r)?)?;
            Ok(json!({ "radius": r, "eigenvalues": ev }))
        })
        .collect::<Result<_, _>>()?;
    let summary = json!({
        "schema": 1,
        "a_hom": corr.a_hom.matrix,
        "radii": radii,
        "minimal_radius": r_star,
        "growth": growth,
        "gradient_averages": averages,
        "gram": gram,
        "energy": energy_profile(&corr, 0, center, &radii)?,
        "reports": corr.reports,
    });
    write_json(&out.join("diagnose.json"), &summary)?;
    Ok(vec!["diagnose.json".into()])
}

pub fn plan(cfg: &RunConfig, kind: ExperimentKind) -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(kind, cfg.dim, cfg.n, cfg.field(), cfg.realizations, cfg.seed);
    if let Some(r) = &cfg.radii {
        plan.radii = r.clone();
    }
    if let Some(s) = &cfg.sizes {
        plan.sizes = s.clone();
    }
    if let Some(c) = cfg.centers {
        plan.centers = c;
    }
    plan.t_factors = cfg.t_ladder.clone();
    plan.deltas = cfg.deltas();
    plan.solver = cfg.solver();
    plan
}

pub fn experiment(cfg: &RunConfig, kind: ExperimentKind, out: &Path) -> Outcome {
    if cfg.laminate.is_some() {
        return Err(CliError::Config("experiments need a random or constant field model, not a laminate".into()));
    }
    let plan = plan(cfg, kind);
    plan.validate()?;
    let records = run_ensemble(&plan)?;
    let mut w = BufWriter::new(File::create(out.join("records.csv"))?);
    write_records_csv(&mut w, &records)?;
    w.flush()?;
    let summary = analyze(&plan, &records)?;
    write_json(&out.join("summary.json"), &json!({ "schema": 1, "plan": plan, "summary": summary }))?;
    Ok(vec!["records.csv".into(), "summary.json".into()])
}

#[derive(Serialize)]
struct PartitionRow {
    beta: f64,
    half_width: f64,
    cells: usize,
    c_meas: f64,
    gamma: f64,
    interaction_sum: f64,
}

/// Construction, tiling, refinement constant and interaction sum for each `beta`.
pub fn partition_check(cfg: &RunConfig, out: &Path) -> Outcome {
    let betas = cfg.betas.clone().unwrap_or_else(|| vec![cfg.beta()]);
    let d = cfg.dim;
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for &beta in &betas {
        let part = build_partition(d, cfg.half_width, beta)?;
        part.check_tiling(10_000, cfg.seed)?;
        let c_meas = check_refinement(&part)?;
        let gamma = d as f64 * (1.0 - beta) + cfg.interaction_offset;
        let s = interaction_sum(&part, gamma)?;
        let name = format!("partition_beta_{beta}.csv");
        let mut w = BufWriter::new(File::create(out.join(&name))?);
        part.write_csv(&mut w)?;
        w.flush()?;
        files.push(name);
        rows.push(PartitionRow { beta, half_width: cfg.half_width, cells: part.cells.len(), c_meas, gamma, interaction_sum: s });
    }
    let mut w = BufWriter::new(File::create(out.join("partition_check.csv"))?);
    writeln!(w, "beta,half_width,cells,c_meas,gamma,interaction_sum")?;
    for r in &rows {
        writeln!(w, "{},{},{},{},{},{}", r.beta, r.half_width, r.cells, r.c_meas, r.gamma, r.interaction_sum)?;
    }
    w.flush()?;
    write_json(&out.join("partition_check.json"), &json!({ "schema": 1, "dim": d, "rows": rows }))?;
    files.push("partition_check.csv".into());
    files.push("partition_check.json".into());
    Ok(files)
}

#[derive(Serialize)]
struct SensitivityRow {
    target: Target,
    perturbation: &'static str,
    check: FdCheck,
    carre_du_champ: f64,
}

/// Adjoint derivative against finite differences for phi- and sigma-functionals under a
/// symmetric and a skew one-cell perturbation.
pub fn sensitivity_check(cfg: &RunConfig, out: &Path) -> Outcome {
    let grid = cfg.grid()?;
    let d = grid.dim();
    let center = cfg.center_index(grid)?;
    let a = realization(cfg, grid, 0)?;
    let opts = cfg.solver();
    let corr = CorrectorSet::compute(&a, &opts)?;
    let step = cfg.sens_step.unwrap_or_else(|| FdCheck::default_step(cfg.lambda));
    let cell = grid.offset(center, &[1, 1, if d == 3 { 1 } else { 0 }]);
    let mut sym = vec![0.0; d * d];
    sym[0] = 1.0;
    let j = skew_generator(d);
    let norm = j[..d * d].iter().map(|v| v * v).sum::<f64>().sqrt();
    let skew: Vec<f64> = j[..d * d].iter().map(|v| v / norm).collect();
    let direction: Vec<f64> = vec![1.0 / (d as f64).sqrt(); d];
    let blocks = CellPartition::uniform(grid, cfg.block)?;
    let mut rows = Vec::new();
    for target in [Target::Phi { i: 0 }, Target::Sigma { i: 0, j: 0, k: 1 }] {
        let spec = FunctionalSpec::ball(grid, target, &direction, center, cfg.sens_radius)?;
        let cdc = carre_du_champ(&malliavin_derivative(&a, &corr, &spec, &opts)?, &blocks)?;
        for (label, dir) in [("symmetric", &sym), ("skew", &skew)] {
            let check = fd_check(&a, &spec, &[cell], dir, step, &opts)?;
            rows.push(SensitivityRow { target, perturbation: label, check, carre_du_champ: cdc });
        }
    }
    write_json(&out.join("sensitivity.json"), &json!({ "schema": 1, "step": step, "cell": cell, "rows": rows }))?;
    Ok(vec!["sensitivity.json".into()])
}
