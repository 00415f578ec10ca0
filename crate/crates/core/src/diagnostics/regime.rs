use serde::{Deserialize, Serialize};

/// Growth regime of the extended corrector, split at `beta = 1 - 2/d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Bounded,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn classify(dim: usize, beta: f64) -> Self {
        let crit = 1.0 - 2.0 / dim as f64;
        if (beta - crit).abs() < 1e-9 {
            Regime::Critical
        } else if beta < crit {
            Regime::Bounded
        } else {
            Regime::Supercritical
        }
    }
}

fn excess_exponent(dim: usize, beta: f64) -> f64 {
    0.5 * dim as f64 * (beta - 1.0 + 2.0 / dim as f64)
}

/// `mu_{d,beta}(R)`: 1, `log(1 + R)` or `R^{d/2 (beta - 1 + 2/d)}`.
pub fn mu(dim: usize, beta: f64, r: f64) -> f64 {
    match Regime::classify(dim, beta) {
        Regime::Bounded => 1.0,
        Regime::Critical => (1.0 + r).ln(),
        Regime::Supercritical => r.powf(excess_exponent(dim, beta)),
    }
}

/// `G_{d,beta}(x)` as a function of `|x|`: 1, `log(2 + |x|)^{1/2}` or `1 + |x|^{d/2 (beta - 1 + 2/d)}`.
pub fn g_weight(dim: usize, beta: f64, x: f64) -> f64 {
    match Regime::classify(dim, beta) {
        Regime::Bounded => 1.0,
        Regime::Critical => (2.0 + x).ln().sqrt(),
        Regime::Supercritical => 1.0 + x.powf(excess_exponent(dim, beta)),
    }
}

/// Reference shape for the squared corrector growth: `G_{d,beta}(R)^2`.
pub fn growth_reference(dim: usize, beta: f64, r: f64) -> f64 {
    g_weight(dim, beta, r).powi(2)
}
