use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Regime;
use crate::error::Result;

use super::fit::{bootstrap_ci, fit_log_linear, fit_power_law, fit_tail, median, std_dev, FitResult, dyadic_survival};
use super::plan::{ExperimentKind, ExperimentPlan, ExperimentRecord};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// A tabulated series with its fit and, where available, a bootstrap interval for the slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<FitResult>,
    pub slope_ci: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub realizations: usize,
    pub failed: usize,
    pub beta: f64,
    pub regime: Regime,
    pub series: Vec<Series>,
    pub scalars: BTreeMap<String, f64>,
}

impl EnsembleSummary {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied()
    }
}

/// Distinct values of `param` in first-seen order.
fn params(records: &[&ExperimentRecord], functional: &str) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for rec in records {
        for (p, _) in rec.values(functional) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn collect(records: &[&ExperimentRecord], functional: &str, param: f64) -> Vec<f64> {
    records
        .iter()
        .flat_map(|r| r.values(functional))
        .filter(|(p, _)| *p == param)
        .map(|(_, v)| v)
        .collect()
}

fn power_series(name: &str, points: Vec<(f64, f64)>) -> Series {
    let fit = fit_power_law(&points).ok();
    Series { name: name.to_string(), points, fit, slope_ci: None }
}

/// Fits and summary statistics for the records of `plan`.
pub fn analyze(plan: &ExperimentPlan, records: &[ExperimentRecord]) -> Result<EnsembleSummary> {
    let ok: Vec<&ExperimentRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let d = plan.dim as f64;
    let beta = plan.beta();
    let mut series = Vec::new();
    let mut scalars = BTreeMap::new();
    match plan.kind {
        ExperimentKind::Scaling => {
            let radii = params(&ok, "grad_phi_avg");
            let sd_at = |recs: &[&ExperimentRecord]| -> Vec<(f64, f64)> {
                radii.iter().map(|&r| (r, std_dev(&collect(recs, "grad_phi_avg", r)))).collect()
            };
            let mut s = power_series("sd_grad_phi_avg", sd_at(&ok));
            s.slope_ci = bootstrap_ci(ok.len(), BOOTSTRAP_RESAMPLES, plan.master_seed, 0.95, |idx| {
                let recs: Vec<&ExperimentRecord> = idx.iter().map(|&i| ok[i]).collect();
                fit_power_law(&sd_at(&recs)).ok().map(|f| f.slope)
            });
            scalars.insert("expected_slope".into(), -d * (1.0 - beta) / 2.0);
            series.push(s);
        }
        ExperimentKind::Growth => {
            let radii = params(&ok, "growth_variance");
            let points: Vec<(f64, f64)> = radii
                .iter()
                .map(|&r| {
                    let v = collect(&ok, "growth_variance", r);
                    (r, v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect();
            if let (Some(first), Some(last)) = (points.first(), points.last()) {
                scalars.insert("ratio_last_first".into(), last.1 / first.1);
            }
            let fit = fit_log_linear(&points).ok();
            series.push(Series { name: "growth_log_linear".into(), points: points.clone(), fit, slope_ci: None });
            series.push(power_series("growth_power", points));
        }
        ExperimentKind::Tail => {
            let exponent = d * (1.0 - beta);
            for delta in params(&ok, "r_star") {
                let samples = collect(&ok, "r_star", delta);
                let fit = fit_tail(&samples, exponent).ok();
                scalars.insert(format!("median_r_star_delta_{delta}"), median(&samples));
                series.push(Series { name: format!("tail_delta_{delta}"), points: dyadic_survival(&samples), fit, slope_ci: None });
            }
            scalars.insert("exponent".into(), exponent);
        }
        ExperimentKind::Twoscale => {
            let sizes = params(&ok, "twoscale_error");
            let points: Vec<(f64, f64)> = sizes
                .iter()
                .map(|&n| {
                    let v = collect(&ok, "twoscale_error", n);
                    (n, (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt())
                })
                .collect();
            let s = power_series("twoscale_rms", points.clone());
            if let Some(f) = &s.fit {
                scalars.insert("rate".into(), -f.slope);
            }
            let normalized: Vec<f64> = points.iter().map(|(n, e)| e * n / n.ln().sqrt()).collect();
            let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = normalized.iter().copied().fold(f64::INFINITY, f64::min);
            scalars.insert("critical_ratio".into(), max / min);
            scalars.insert("max_error".into(), points.iter().map(|p| p.1).fold(0.0, f64::max));
            series.push(s);
        }
        ExperimentKind::Excess => {
            let slopes: Vec<f64> = ok.iter().flat_map(|r| r.values("excess_slope")).map(|p| p.1).collect();
            scalars.insert("median_slope".into(), median(&slopes));
            scalars.insert("fitted_realizations".into(), slopes.len() as f64);
            let rs: Vec<f64> = ok.iter().flat_map(|r| r.values("r_star")).map(|p| p.1).collect();
            scalars.insert("median_r_star".into(), median(&rs));
            let points: Vec<(f64, f64)> =
                params(&ok, "excess").iter().map(|&r| (r, median(&collect(&ok, "excess", r)))).collect();
            series.push(power_series("excess_median", points));
        }
        ExperimentKind::Fblock => {
            for &t in &plan.t_factors {
                let points: Vec<(f64, f64)> = plan
                    .radii
                    .iter()
                    .map(|&r| {
                        let v: Vec<f64> = ok
                            .iter()
                            .flat_map(|rec| rec.measurements.iter())
                            .filter(|m| m.functional == "f_rt" && m.param == r && m.param2 == r * t)
                            .map(|m| m.value)
                            .collect();
                        (r, median(&v))
                    })
                    .collect();
                series.push(power_series(&format!("f_rt_t_{t}"), points));
            }
        }
    }
    Ok(EnsembleSummary {
        schema: 1,
        kind: plan.kind,
        realizations: records.len(),
        failed: records.len() - ok.len(),
        beta,
        regime: plan.regime(),
        series,
        scalars,
    })
}
