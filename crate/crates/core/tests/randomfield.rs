use homlab::lattice::Grid;
use homlab::randomfield::{
    empirical_covariance, kernel, sample_coefficients, CoefficientModel, CovarianceSpec, GaussianSampler, SeedSpec,
};

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn small_lag_covariance_tracks_kernel() {
    let g = Grid::new(2, 64).unwrap();
    let spec = CovarianceSpec::new(3.0, 2).unwrap();
    let s = GaussianSampler::new(&spec, g).unwrap();
    let samples: Vec<_> = (0..64).map(|i| s.sample(SeedSpec::new(3, i))).collect();
    let p = empirical_covariance(&samples).unwrap();
    for r in 1..4 {
        let expected = kernel(3.0, r as f64) - s.zero_mode_deficit();
        assert!((p.c[r] - expected).abs() < 4.0 * p.stderr[r] + 0.02, "r = {r}: {} vs {expected}", p.c[r]);
    }
}

#[test]
fn coefficient_sampling_is_reproducible() {
    let g = Grid::new(2, 32).unwrap();
    let spec = CovarianceSpec::new(2.5, 2).unwrap();
    let model = CoefficientModel::new(0.25, 0.2).unwrap();
    let a = sample_coefficients(g, &spec, &model, SeedSpec::new(11, 2)).unwrap();
    let b = sample_coefficients(g, &spec, &model, SeedSpec::new(11, 2)).unwrap();
    assert_eq!(a.field, b.field);
    assert!(!a.field.is_symmetric());
}

#[test]
fn long_range_covariance_slope() {
    let g = Grid::new(2, 512).unwrap();
    let spec = CovarianceSpec::new(1.0, 2).unwrap();
    let s = GaussianSampler::new(&spec, g).unwrap();
    let samples: Vec<_> = (0..256).map(|i| s.sample(SeedSpec::new(2024, i))).collect();
    let p = empirical_covariance(&samples).unwrap();
    let deficit = s.zero_mode_deficit();
    let (x, y): (Vec<f64>, Vec<f64>) = (4..=64).map(|r| ((r as f64).ln(), (p.c[r] + deficit).ln())).unzip();
    let slope = ols_slope(&x, &y);
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn stationarity_ks() {
    // two-sample KS between cell marginals at two shifted points over M realizations
    let g = Grid::new(2, 32).unwrap();
    let spec = CovarianceSpec::new(2.5, 2).unwrap();
    let model = CoefficientModel::new(0.25, 0.0).unwrap();
    let m = 120;
    let z = g.index(&[13, 7]);
    let mut x: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for i in 0..m {
        let a = sample_coefficients(g, &spec, &model, SeedSpec::new(77, i)).unwrap();
        x.push(a.field.entry(0, 0)[0]);
        y.push(a.field.entry(0, 0)[z]);
    }
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for v in x.iter().chain(&y) {
        let fx = x.partition_point(|t| t <= v) as f64 / m as f64;
        let fy = y.partition_point(|t| t <= v) as f64 / m as f64;
        d = d.max((fx - fy).abs());
    }
    let crit = 1.63 * (2.0 / m as f64).sqrt();
    assert!(d < crit, "KS {d} vs {crit}");
}
