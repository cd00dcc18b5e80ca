//! Gaussian dominance and 2-stability.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{McEstimate, SLACK_SE};
use crate::error::{domain, Error, Result};
use crate::model::{norm, RngSeed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub t: f64,
    /// `Pr[Σ X_i² ≤ t]` with the smaller variances.
    pub x: McEstimate,
    /// `Pr[Σ Y_i² ≤ t]` with the larger variances.
    pub y: McEstimate,
    pub combined_std_err: f64,
    pub dominance_holds: bool,
}

fn lower_cdf(vars: &[f64], t: f64, trials: usize, seed: RngSeed) -> McEstimate {
    let mut rng = seed.rng();
    let sds: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
    let hits = (0..trials)
        .filter(|_| {
            sds.iter()
                .map(|sd| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (sd * z).powi(2)
                })
                .sum::<f64>()
                <= t
        })
        .count();
    McEstimate::new(hits as u64, trials as u64, None)
}

/// Empirical check that larger variances make the sum of squares stochastically larger.
pub fn mc_gaussian_dominance(
    x_vars: &[f64],
    y_vars: &[f64],
    t: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<DominanceReport> {
    if x_vars.is_empty() || x_vars.len() != y_vars.len() {
        return Err(Error::SizeMismatch {
            left: x_vars.len(),
            right: y_vars.len(),
        });
    }
    if let Some(&v) = x_vars.iter().chain(y_vars).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(domain("variance", v, "(0, inf)"));
    }
    if let Some((xv, _)) = x_vars.iter().zip(y_vars).find(|(x, y)| y < x) {
        return Err(domain("x variance above y variance", *xv, "[0, y_i]"));
    }
    if !(t > 0.0) {
        return Err(domain("t", t, "(0, inf)"));
    }
    let x = lower_cdf(x_vars, t, trials, seed.derive(0));
    let y = lower_cdf(y_vars, t, trials, seed.derive(1));
    let combined = (x.std_err.powi(2) + y.std_err.powi(2)).sqrt();
    Ok(DominanceReport {
        t,
        dominance_holds: y.p_hat <= x.p_hat + SLACK_SE * combined,
        combined_std_err: combined,
        x,
        y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub samples: usize,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub expected_variance: f64,
    /// Standard error of the sample variance of Gaussian data, `σ²·sqrt(2/(n-1))`.
    pub variance_std_err: f64,
    pub ks_gap: f64,
    pub ks_threshold: f64,
    pub variance_ok: bool,
    pub ks_ok: bool,
}

impl StabilityReport {
    pub fn passes(&self) -> bool {
        self.variance_ok && self.ks_ok
    }
}

/// Two-sample Kolmogorov-Smirnov critical gap at significance `alpha`.
pub fn ks_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-0.5 * (alpha / 2.0).ln()).sqrt() * ((n + m) / (n * m)).sqrt()
}

fn ks_gap(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut gap) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        gap = gap.max((i as f64 / n - j as f64 / m).abs());
    }
    gap
}

/// Compares `Σ u_i X_i` (with `X_i ~ N(0, σ²)`) against `‖u‖·N(0, σ²)`.
pub fn mc_two_stability(u: &[f64], sigma: f64, trials: usize, seed: RngSeed) -> Result<StabilityReport> {
    if u.is_empty() || u.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(domain("sigma", sigma, "(0, inf)"));
    }
    if trials < 2 {
        return Err(domain("trials", trials as f64, "[2, inf)"));
    }
    let mut rng = seed.derive(0).rng();
    let combos: Vec<f64> = (0..trials)
        .map(|_| {
            u.iter()
                .map(|&ui| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    ui * sigma * z
                })
                .sum()
        })
        .collect();
    let scale = norm(u) * sigma;
    let mut rng = seed.derive(1).rng();
    let reference: Vec<f64> = (0..trials)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();

    let n = trials as f64;
    let mean = combos.iter().sum::<f64>() / n;
    let variance = combos.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let expected = scale * scale;
    let variance_std_err = expected * (2.0 / (n - 1.0)).sqrt();
    let gap = ks_gap(combos, reference);
    let threshold = ks_threshold(trials, trials, 0.01);
    Ok(StabilityReport {
        samples: trials,
        sample_mean: mean,
        sample_variance: variance,
        expected_variance: expected,
        variance_std_err,
        ks_gap: gap,
        ks_threshold: threshold,
        variance_ok: (variance - expected).abs() <= 5.0 * variance_std_err,
        ks_ok: gap < threshold,
    })
}
