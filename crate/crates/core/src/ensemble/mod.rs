//! Monte-Carlo ensembles over coefficient realizations and the fits applied to them.

mod analysis;
pub mod fit;
mod plan;
mod run;
mod twoscale;

pub use analysis::{analyze, EnsembleSummary, Series, BOOTSTRAP_RESAMPLES};
pub use fit::{
    bootstrap_ci, dyadic_survival, fit_log_linear, fit_power_law, fit_tail, linear_fit, median, std_dev, FitKind,
    FitResult,
};
pub use plan::{ExperimentKind, ExperimentPlan, ExperimentRecord, FieldModel, Measurement};
pub use run::{run_ensemble, run_indices, write_records_csv, CSV_HEADER};
pub use twoscale::{sine_data, twoscale_error, TwoScaleError};

/// Runs `plan` and the fits for its kind.
pub fn twoscale_experiment(plan: &ExperimentPlan) -> crate::Result<(Vec<ExperimentRecord>, EnsembleSummary)> {
    if plan.kind != ExperimentKind::Twoscale {
        return Err(crate::Error::InvalidParameter(format!("expected a twoscale plan, got {}", plan.kind)));
    }
    let records = run_ensemble(plan)?;
    let summary = analyze(plan, &records)?;
    Ok((records, summary))
}
