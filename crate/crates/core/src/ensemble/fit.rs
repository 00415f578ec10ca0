use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `log y` against `log r`.
    PowerLaw,
    /// `log P(r_* >= r)` against `r^a`.
    StretchedExponential,
    /// `V` against `log R`.
    LogLinear,
}

/// Least-squares line with its diagnostics. `stderr` is `None` when only two points were fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: Option<f64>,
    pub r_squared: f64,
    pub points: usize,
    pub degenerate: bool,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64], kind: FitKind) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::Fit("x and y differ in length".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least two points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    let stderr = (n > 2).then(|| (ss_res / (nf - 2.0) / sxx).sqrt());
    Ok(FitResult { kind, slope, intercept, stderr, r_squared, points: n, degenerate: false })
}

/// Slope of `log y` against `log r`.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if let Some(p) = pairs.iter().find(|(r, y)| !(*r > 0.0 && *y > 0.0)) {
        return Err(Error::Fit(format!("power-law fit needs positive data, got ({}, {})", p.0, p.1)));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    linear_fit(&x, &y, FitKind::PowerLaw)
}

/// Slope of `y` against `log r`.
pub fn fit_log_linear(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::Fit("log-linear fit needs positive abscissae".into()));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    linear_fit(&x, &y, FitKind::LogLinear)
}

/// Empirical survival `P(s >= r)` at dyadic `r = 1, 2, 4, ...` while positive.
/// Infinite samples survive every level.
pub fn dyadic_survival(samples: &[f64]) -> Vec<(f64, f64)> {
    let n = samples.len() as f64;
    let mut out = Vec::new();
    let mut r = 1.0;
    loop {
        let count = samples.iter().filter(|&&s| s >= r).count();
        if count == 0 || r > 1e12 {
            break;
        }
        out.push((r, count as f64 / n));
        if count == samples.len() && samples.iter().all(|s| s.is_infinite()) {
            break;
        }
        r *= 2.0;
    }
    out
}

/// Regression of `log P(r_* >= r)` against `r^a` over the populated dyadic levels.
/// Samples that are all equal, or populate fewer than two levels, give a degenerate result.
pub fn fit_tail(samples: &[f64], exponent: f64) -> Result<FitResult> {
    if samples.len() < 32 {
        return Err(Error::Fit(format!("tail fit needs at least 32 samples, got {}", samples.len())));
    }
    if !(exponent > 0.0) {
        return Err(Error::Fit(format!("tail exponent {exponent} must be positive")));
    }
    let degenerate = FitResult {
        kind: FitKind::StretchedExponential,
        slope: 0.0,
        intercept: 0.0,
        stderr: None,
        r_squared: 0.0,
        points: 0,
        degenerate: true,
    };
    if samples.iter().all(|&s| s == samples[0]) {
        return Ok(degenerate);
    }
    let surv = dyadic_survival(samples);
    if surv.len() < 2 {
        return Ok(FitResult { points: surv.len(), ..degenerate });
    }
    let x: Vec<f64> = surv.iter().map(|p| p.0.powf(exponent)).collect();
    let y: Vec<f64> = surv.iter().map(|p| p.1.ln()).collect();
    linear_fit(&x, &y, FitKind::StretchedExponential)
}

/// Percentile bootstrap interval of a statistic over resampled item indices.
/// Resamples where `stat` returns `None` are dropped.
pub fn bootstrap_ci<F>(items: usize, resamples: usize, seed: u64, level: f64, mut stat: F) -> Option<(f64, f64)>
where
    F: FnMut(&[usize]) -> Option<f64>,
{
    if items == 0 || resamples == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; items];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for v in idx.iter_mut() {
            *v = rng.random_range(0..items);
        }
        if let Some(s) = stat(&idx).filter(|s| s.is_finite()) {
            values.push(s);
        }
    }
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let q = |p: f64| values[((p * (values.len() - 1) as f64).round() as usize).min(values.len() - 1)];
    let tail = (1.0 - level) / 2.0;
    Some((q(tail), q(1.0 - tail)))
}

/// Sample standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_power_law() {
        let pairs: Vec<_> = [1.0, 2.0, 4.0, 8.0].iter().map(|&r| (r, 1.0 / r)).collect();
        let f = fit_power_law(&pairs).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let pairs: Vec<_> = (0..8)
            .map(|k| {
                let r = 2f64.powi(k);
                (r, 3.0 * r.powf(-1.5) * (1.0 + noise.sample(&mut rng)))
            })
            .collect();
        let f = fit_power_law(&pairs).unwrap();
        assert!((f.slope + 1.5).abs() < 0.05, "{}", f.slope);
    }

    #[test]
    fn two_points_interpolate() {
        let f = fit_power_law(&[(1.0, 2.0), (4.0, 0.5)]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!(f.stderr.is_none());
        assert!(fit_power_law(&[(1.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 2.0), (2.0, 0.0), (4.0, 1.0)]).is_err());
    }

    fn stretched_samples(n: usize, a: f64, c: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                (-c * (1.0 - u).ln()).powf(1.0 / a)
            })
            .collect()
    }

    #[test]
    fn tail_fit_recovers_constant() {
        let s = stretched_samples(20000, 2.0, 100.0, 5);
        let f = fit_tail(&s, 2.0).unwrap();
        assert!(!f.degenerate);
        assert!(f.r_squared >= 0.98, "{}", f.r_squared);
        assert!((f.slope * 100.0 + 1.0).abs() < 0.1, "{}", f.slope);
    }

    #[test]
    fn tail_fit_sensitive_to_exponent() {
        let s = stretched_samples(20000, 2.0, 100.0, 5);
        let good = fit_tail(&s, 2.0).unwrap();
        let half = fit_tail(&s, 1.0).unwrap();
        assert!((half.slope - good.slope).abs() > 0.5 * good.slope.abs());
        assert!(half.r_squared < good.r_squared);
    }

    #[test]
    fn tail_fit_degenerate() {
        let f = fit_tail(&[1.0; 64], 2.0).unwrap();
        assert!(f.degenerate);
        assert!(fit_tail(&[1.0; 8], 2.0).is_err());
    }

    #[test]
    fn bootstrap_brackets_mean() {
        let data: Vec<f64> = (0..200).map(|k| (k % 17) as f64).collect();
        let mean = data.iter().sum::<f64>() / 200.0;
        let (lo, hi) = bootstrap_ci(200, 1000, 1, 0.95, |idx| {
            Some(idx.iter().map(|&i| data[i]).sum::<f64>() / idx.len() as f64)
        })
        .unwrap();
        assert!(lo < mean && mean < hi);
        assert!(hi - lo < 2.0);
    }

    #[test]
    fn median_and_sd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((std_dev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn recovers_random_exponents(p in -3.0f64..0.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let noise = Normal::new(0.0, 0.02).unwrap();
            let pairs: Vec<_> = (0..7)
                .map(|k| {
                    let r = 2f64.powi(k);
                    (r, r.powf(p) * Distribution::<f64>::sample(&noise, &mut rng).exp())
                })
                .collect();
            let f = fit_power_law(&pairs).unwrap();
            prop_assert!((f.slope - p).abs() <= 3.0 * f.stderr.unwrap());
        }
    }
}
