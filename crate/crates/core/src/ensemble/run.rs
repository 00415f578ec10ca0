use std::io::Write;

use crate::corrector::{compute_f_rt, compute_modified, CorrectorSet};
use crate::diagnostics::{excess_decay_experiment, growth_profile, harmonic_quadratic, minimal_radius, spread_centers};
use crate::elliptic::solve_divform;
use crate::error::{Error, Result};
use crate::lattice::{grad, Ball, Grid, ScalarField};
use crate::par;
use crate::randomfield::SeedSpec;

use super::plan::{ExperimentKind, ExperimentPlan, ExperimentRecord, Measurement};
use super::twoscale::{sine_data, twoscale_error};

/// Stream offset for randomness that is not part of the coefficient field.
const AUX_SEED: u64 = 0x5_eed0_fa11;

fn measure(plan: &ExperimentPlan, index: usize) -> Result<Vec<Measurement>> {
    let grid = plan.grid()?;
    let seed = plan.seed(index);
    let opts = &plan.solver;
    let mut out = Vec::new();
    match plan.kind {
        ExperimentKind::Scaling => {
            let a = plan.field.sample(grid, seed)?;
            let (phi, rep) = solve_divform(&a, &a.column(0), 0.0, opts)?;
            rep.check()?;
            let d1 = ScalarField::from_vec(grid, grad(&phi).component(0).to_vec())?;
            for (k, &c) in spread_centers(grid, plan.centers).iter().enumerate() {
                for &r in &plan.radii {
                    let v = crate::lattice::ball_average(&d1, &Ball::new(grid, c, r)?)?;
                    out.push(Measurement::new("grad_phi_avg", k, r, v));
                }
            }
        }
        ExperimentKind::Growth => {
            let a = plan.field.sample(grid, seed)?;
            let corr = CorrectorSet::compute(&a, opts)?;
            let prof = growth_profile(&corr, &plan.radii, &spread_centers(grid, plan.centers), plan.beta())?;
            for (r, v) in prof.radii.iter().zip(&prof.values) {
                out.push(Measurement::new("growth_variance", 0, *r, *v));
            }
        }
        ExperimentKind::Tail => {
            let a = plan.field.sample(grid, seed)?;
            let corr = CorrectorSet::compute(&a, opts)?;
            let rep = minimal_radius(&corr, plan.deltas[0], 0)?;
            for (r, v) in rep.radii.iter().zip(&rep.values) {
                out.push(Measurement::new("oscillation", 0, *r, *v));
            }
            for &delta in &plan.deltas {
                out.push(Measurement::new("r_star", 0, delta, rep.with_delta(delta).r_star));
            }
        }
        ExperimentKind::Twoscale => {
            for &n in &plan.sizes {
                let g = Grid::new(plan.dim, n)?;
                let a = plan.field.sample(g, seed)?;
                let e = twoscale_error(&a, &sine_data(g), opts)?;
                out.push(Measurement::new("twoscale_error", 0, n as f64, e.error));
            }
        }
        ExperimentKind::Excess => {
            let a = plan.field.sample(grid, seed)?;
            let corr = CorrectorSet::compute(&a, opts)?;
            let rs = minimal_radius(&corr, plan.deltas[0], 0)?.r_star;
            out.push(Measurement::new("r_star", 0, plan.deltas[0], rs));
            let mut rng = SeedSpec::new(plan.master_seed ^ AUX_SEED, index as u64).rng();
            let h = harmonic_quadratic(&corr.a_hom.matrix, plan.dim, &mut rng);
            let ball = Ball::new(grid, 0, grid.side_length() / 4.0)?;
            let fit_radii: Vec<f64> = plan.radii.iter().copied().filter(|&r| r >= 2.0 * rs).collect();
            let dec = excess_decay_experiment(&a, &corr, &ball, &h, &plan.radii, opts)?;
            for (r, e) in dec.radii.iter().zip(&dec.excess) {
                out.push(Measurement::new("excess", 0, *r, *e));
            }
            let pairs: Vec<(f64, f64)> = dec
                .radii
                .iter()
                .zip(&dec.excess)
                .filter(|(r, e)| fit_radii.contains(r) && **e > 0.0)
                .map(|(r, e)| (*r, *e))
                .collect();
            if pairs.len() >= 2 {
                let fit = super::fit::fit_power_law(&pairs)?;
                out.push(Measurement::new("excess_slope", 0, pairs.len() as f64, fit.slope));
            }
        }
        ExperimentKind::Fblock => {
            let a = plan.field.sample(grid, seed)?;
            for &t in &plan.t_factors {
                for &r in &plan.radii {
                    let tt = r * t;
                    let m = compute_modified(&a, tt, opts)?;
                    let f = compute_f_rt(&m, &Ball::new(grid, 0, r)?)?;
                    out.push(Measurement { param2: tt, ..Measurement::new("f_rt", 0, r, f) });
                }
            }
        }
    }
    Ok(out)
}

/// Records for the given realization indices, in the given order. Failures are recorded, not raised.
pub fn run_indices(plan: &ExperimentPlan, indices: &[usize]) -> Result<Vec<ExperimentRecord>> {
    plan.validate_ladders()?;
    Ok(par::map_range(indices.len(), |k| {
        let index = indices[k];
        let (measurements, failure) = match measure(plan, index) {
            Ok(m) => (m, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        ExperimentRecord { index, master_seed: plan.master_seed, measurements, failure }
    }))
}

/// One record per realization `0..M`; fails if more than 10% of the realizations fail.
pub fn run_ensemble(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>> {
    plan.validate()?;
    let indices: Vec<usize> = (0..plan.realizations).collect();
    let records = run_indices(plan, &indices)?;
    let failed = records.iter().filter(|r| r.failure.is_some()).count();
    if failed * 10 > records.len() {
        return Err(Error::EnsembleFailed { failed, total: records.len() });
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "realization,master_seed,functional,center,param,param2,value";

/// One row per measurement; failed realizations get a single `failed` row with value `NaN`.
pub fn write_records_csv<W: Write>(mut w: W, records: &[ExperimentRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for rec in records {
        if rec.failure.is_some() {
            writeln!(w, "{},{},failed,0,0,0,NaN", rec.index, rec.master_seed)?;
        }
        for m in &rec.measurements {
            writeln!(w, "{},{},{},{},{},{},{}", rec.index, rec.master_seed, m.functional, m.center, m.param, m.param2, m.value)?;
        }
    }
    Ok(())
}
