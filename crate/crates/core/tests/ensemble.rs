use homlab::elliptic::SolveOptions;
use homlab::ensemble::*;
use homlab::Error;

fn gaussian() -> FieldModel {
    FieldModel::Gaussian { gamma: 2.5, lambda: 0.25, skew: 0.0 }
}

fn csv(records: &[ExperimentRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_records_csv(&mut out, records).unwrap();
    out
}

#[test]
fn constant_plan_measures_zero() {
    let plan = ExperimentPlan::new(ExperimentKind::Scaling, 2, 32, FieldModel::Constant { value: 0.5 }, 2, 1);
    let recs = run_indices(&plan, &[0, 1]).unwrap();
    assert_eq!(recs.len(), 2);
    for r in &recs {
        assert!(r.failure.is_none());
        assert!(!r.measurements.is_empty());
        assert!(r.measurements.iter().all(|m| m.value == 0.0));
    }
}

#[test]
fn rerun_gives_identical_csv() {
    let mut plan = ExperimentPlan::new(ExperimentKind::Scaling, 2, 32, gaussian(), 8, 11);
    plan.centers = 4;
    let a = csv(&run_ensemble(&plan).unwrap());
    let b = csv(&run_ensemble(&plan).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(!text.contains('\r'));
}

#[test]
fn shuffled_order_gives_same_records() {
    let plan = ExperimentPlan::new(ExperimentKind::Tail, 2, 32, gaussian(), 8, 5);
    let fwd = run_indices(&plan, &[0, 1, 2, 3, 4, 5]).unwrap();
    let mut rev = run_indices(&plan, &[5, 3, 1, 4, 2, 0]).unwrap();
    rev.sort_by_key(|r| r.index);
    assert_eq!(fwd, rev);
}

#[test]
fn constant_tail_is_degenerate() {
    let plan = ExperimentPlan::new(ExperimentKind::Tail, 2, 16, FieldModel::Constant { value: 1.0 }, 32, 2);
    let recs = run_ensemble(&plan).unwrap();
    assert!(recs.iter().all(|r| r.values("r_star") == vec![(1.0 / 16.0, 1.0)]));
    let s = analyze(&plan, &recs).unwrap();
    let fit = s.series[0].fit.as_ref().unwrap();
    assert!(fit.degenerate);
}

#[test]
fn constant_twoscale_error_vanishes() {
    let mut plan = ExperimentPlan::new(ExperimentKind::Twoscale, 3, 8, FieldModel::Constant { value: 0.8 }, 8, 3);
    plan.sizes = vec![8, 16];
    plan.solver = SolveOptions::with_tol(1e-12);
    let (recs, s) = twoscale_experiment(&plan).unwrap();
    assert!(recs.iter().flat_map(|r| r.values("twoscale_error")).all(|(_, e)| e < 1e-10));
    assert!(s.scalar("max_error").unwrap() < 1e-10);
}

#[test]
fn excessive_failures_abort_the_run() {
    let mut plan = ExperimentPlan::new(ExperimentKind::Scaling, 2, 32, gaussian(), 8, 4);
    plan.solver = SolveOptions { tol: 1e-14, max_iter: 1, ..SolveOptions::default() };
    assert!(matches!(run_ensemble(&plan), Err(Error::EnsembleFailed { failed: 8, total: 8 })));
    let recs = run_indices(&plan, &[0]).unwrap();
    assert!(recs[0].failure.is_some());
    assert!(String::from_utf8(csv(&recs)).unwrap().contains("0,4,failed,0,0,0,NaN"));
}

#[test]
fn plan_validation() {
    let plan = ExperimentPlan::new(ExperimentKind::Scaling, 2, 32, gaussian(), 4, 0);
    assert!(plan.validate().is_err());
    let mut plan = ExperimentPlan::new(ExperimentKind::Scaling, 2, 32, gaussian(), 8, 0);
    plan.radii = vec![8.0];
    assert!(matches!(plan.validate(), Err(Error::BallRadius { .. })));
    let mut plan = ExperimentPlan::new(ExperimentKind::Growth, 2, 32, gaussian(), 8, 0);
    plan.centers = 4;
    assert!(plan.validate().is_err());
    let mut plan = ExperimentPlan::new(ExperimentKind::Fblock, 2, 64, gaussian(), 8, 0);
    plan.t_factors = vec![100.0];
    assert!(plan.validate().is_err());
    assert_eq!("fblock".parse::<ExperimentKind>().unwrap(), ExperimentKind::Fblock);
    assert!("nope".parse::<ExperimentKind>().is_err());
}

#[test]
fn scaling_summary_has_bootstrap_interval() {
    let mut plan = ExperimentPlan::new(ExperimentKind::Scaling, 2, 64, gaussian(), 8, 21);
    plan.centers = 4;
    plan.radii = vec![2.0, 4.0, 8.0];
    let recs = run_ensemble(&plan).unwrap();
    let s = analyze(&plan, &recs).unwrap();
    let series = s.series("sd_grad_phi_avg").unwrap();
    let fit = series.fit.as_ref().unwrap();
    let (lo, hi) = series.slope_ci.unwrap();
    assert!(lo <= hi);
    assert!(fit.slope < 0.0);
    assert_eq!(s.scalar("expected_slope"), Some(-1.0));
    assert_eq!(s.schema, 1);
}

#[test]
fn fblock_and_excess_run() {
    let mut plan = ExperimentPlan::new(ExperimentKind::Fblock, 2, 32, gaussian(), 8, 6);
    plan.radii = vec![2.0, 4.0];
    let recs = run_ensemble(&plan).unwrap();
    assert!(recs.iter().all(|r| r.values("f_rt").iter().all(|(_, v)| *v > 0.0)));
    let mut plan = ExperimentPlan::new(ExperimentKind::Excess, 2, 32, FieldModel::Constant { value: 1.0 }, 8, 6);
    plan.radii = vec![2.0, 2.8, 4.0];
    let recs = run_ensemble(&plan).unwrap();
    let s = analyze(&plan, &recs).unwrap();
    assert!((s.scalar("median_slope").unwrap() - 2.0).abs() < 0.2, "{s:?}");
}
