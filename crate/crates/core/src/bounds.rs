//! Closed-form tail bounds behind the construction.
//!
//! Every function returns a [`TailBound`] whose `value` is clamped to `[0, 1]`; the
//! unclamped formula value is kept in `raw`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    /// `2d·exp(-s²d/2)`
    SmoothnessChernoff,
    /// `d·exp(-s²d/2.2)`, valid for `s > 3/√d`
    SmoothnessKhintchine,
    /// `exp(-c/2.2)`
    DatasetSmoothnessFailure,
    /// `(3ε)^k`
    Shrinkage,
    /// `exp((k-t)/2)·(t/k)^{k/2}`
    ChiSquareLowerTail,
    /// Fixed `1/20` budget for some row energy falling below `q/2`.
    RowEnergyFailure,
    /// Failure budget `δ` used for the distortion and nearest-neighbor suites.
    FailureBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub value: f64,
    pub raw: f64,
    pub formula: FormulaId,
    pub inputs: Vec<(String, f64)>,
}

impl TailBound {
    fn new(formula: FormulaId, raw: f64, inputs: &[(&str, f64)]) -> Self {
        TailBound {
            value: raw.clamp(0.0, 1.0),
            raw,
            formula,
            inputs: inputs.iter().map(|&(k, v)| (k.to_owned(), v)).collect(),
        }
    }

    /// A constant probability budget.
    pub fn budget(formula: FormulaId, value: f64) -> Self {
        TailBound::new(formula, value, &[("budget", value)])
    }

    pub fn is_clamped(&self) -> bool {
        self.raw > 1.0
    }
}

fn check_sd(s: f64, d: usize) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain("s", s, "[0, inf)"));
    }
    if d == 0 {
        return Err(domain("d", 0.0, "[1, inf)"));
    }
    Ok(())
}

/// Chernoff-type bound on `Pr[‖HDx‖∞ ≥ s]` for a unit vector `x`.
pub fn smoothness_tail_chernoff(s: f64, d: usize) -> Result<TailBound> {
    check_sd(s, d)?;
    let d_f = d as f64;
    let raw = 2.0 * d_f * (-s * s * d_f / 2.0).exp();
    Ok(TailBound::new(
        FormulaId::SmoothnessChernoff,
        raw,
        &[("s", s), ("d", d_f)],
    ))
}

/// Khintchine-based bound on `Pr[‖HDx‖∞ ≥ s]`; only valid for `s > 3/√d`.
pub fn smoothness_tail_khintchine(s: f64, d: usize) -> Result<TailBound> {
    check_sd(s, d)?;
    let d_f = d as f64;
    if s <= 3.0 / d_f.sqrt() {
        return Err(Error::Precondition(format!(
            "Khintchine tail needs s > 3/sqrt(d) = {}, got s = {s}",
            3.0 / d_f.sqrt()
        )));
    }
    let raw = d_f * (-s * s * d_f / 2.2).exp();
    Ok(TailBound::new(
        FormulaId::SmoothnessKhintchine,
        raw,
        &[("s", s), ("d", d_f)],
    ))
}

/// Value of `s²d` below which the Khintchine tail is the tighter of the two:
/// `d e^{-a/2.2} ≤ 2d e^{-a/2}` iff `a ≤ 22 ln 2`.
pub fn khintchine_crossover() -> f64 {
    2.0 * 2.2 / (2.2 - 2.0) * std::f64::consts::LN_2
}

/// Khintchine constant together with the `(p/2.5)^{p/2}` majorant used for `p ≥ 9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhintchineConstant {
    pub p: f64,
    pub ln_b: f64,
    pub ln_majorant: f64,
}

impl KhintchineConstant {
    pub fn value(&self) -> f64 {
        self.ln_b.exp()
    }

    pub fn majorant(&self) -> f64 {
        self.ln_majorant.exp()
    }

    pub fn majorant_holds(&self) -> bool {
        self.ln_b <= self.ln_majorant
    }
}

/// `B_p = max{1, 2^{(p-2)/2} Γ((p+1)/2) / Γ(3/2)}`, evaluated in log space.
pub fn khintchine_constant(p: f64) -> Result<KhintchineConstant> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(domain("p", p, "[1, inf)"));
    }
    let ln_formula = (p - 2.0) / 2.0 * std::f64::consts::LN_2 + ln_gamma((p + 1.0) / 2.0)
        - ln_gamma(1.5);
    let ln_b = ln_formula.max(0.0);
    let ln_majorant = p / 2.0 * (p / 2.5).ln();
    let kc = KhintchineConstant {
        p,
        ln_b,
        ln_majorant,
    };
    if p >= 9.0 {
        debug_assert!(kc.majorant_holds(), "B_p majorant fails at p = {p}");
    }
    Ok(kc)
}

/// Probability that a sign diagonal is not in the `s`-smooth setting at
/// `s = sqrt(c ln(n²d) / d)`, reported as `exp(-c/2.2)`.
pub fn dataset_smoothness_failure_bound(n: usize, d: usize, c: f64) -> Result<TailBound> {
    let n2d = (n as f64).powi(2) * d as f64;
    if n2d < 3.7 {
        return Err(Error::Precondition(format!("n^2 d = {n2d} is below 3.7")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(domain("c", c, "[0, inf)"));
    }
    let raw = (-c / 2.2).exp();
    if c == 7.0 {
        debug_assert!(raw <= 1.0 / 20.0);
    }
    Ok(TailBound::new(
        FormulaId::DatasetSmoothnessFailure,
        raw,
        &[("n", n as f64), ("d", d as f64), ("c", c)],
    ))
}

/// `Pr[‖Φx‖ ≤ ε‖x‖] ≤ (3ε)^k`.
pub fn shrinkage_bound(epsilon: f64, k: usize) -> Result<TailBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("epsilon", epsilon, "(0, 1)"));
    }
    if k == 0 {
        return Err(domain("k", 0.0, "[1, inf)"));
    }
    let raw = (3.0 * epsilon).powi(k as i32);
    Ok(TailBound::new(
        FormulaId::Shrinkage,
        raw,
        &[("epsilon", epsilon), ("k", k as f64)],
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTail {
    /// Optimized moment-generating-function bound.
    pub tight: TailBound,
    /// The looser closed form `(e·t)^{k/2}`, unclamped.
    pub loose_raw: f64,
}

impl ChiSquareTail {
    pub fn loose(&self) -> f64 {
        self.loose_raw.min(1.0)
    }
}

/// Chernoff bound on `Pr[χ²_k ≤ t]` from `e^{st}(1+2s)^{-k/2}` at the optimal
/// `s = (k/t - 1)/2`.
pub fn chi_square_lower_tail(t: f64, k: usize) -> Result<ChiSquareTail> {
    let k_f = k as f64;
    if k == 0 {
        return Err(domain("k", 0.0, "[1, inf)"));
    }
    if !(t > 0.0 && t <= k_f) {
        return Err(domain("t", t, "(0, k]"));
    }
    let ln_tight = (k_f - t) / 2.0 + k_f / 2.0 * (t / k_f).ln();
    let ln_loose = k_f / 2.0 * (std::f64::consts::E * t).ln();
    let tail = ChiSquareTail {
        tight: TailBound::new(
            FormulaId::ChiSquareLowerTail,
            ln_tight.exp(),
            &[("t", t), ("k", k_f)],
        ),
        loose_raw: ln_loose.exp(),
    };
    if t <= 1.0 / std::f64::consts::E {
        debug_assert!(ln_tight <= ln_loose.min(0.0) + 1e-12);
    }
    Ok(tail)
}
