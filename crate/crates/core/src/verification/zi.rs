use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{run_trials, McEstimate};
use crate::bounds::{FormulaId, TailBound};
use crate::error::{domain, Error, Result};
use crate::fjlt::{SignDiagonal, SparseProjection};
use crate::model::{norm, RngSeed};

/// Budget for some row energy falling below `q/2`.
pub const ZI_FAILURE_BUDGET: f64 = 1.0 / 20.0;

const SMOOTH_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZiReport {
    pub q: f64,
    /// `Z_i`: mass of the unit vector `u` on the nonzero pattern of row `i`.
    pub z: Vec<f64>,
    pub all_above_half_q: bool,
}

pub fn zi_report(pattern: &SparseProjection, u: &[f64]) -> ZiReport {
    let z = pattern.row_energies(u);
    let q = pattern.q();
    ZiReport {
        all_above_half_q: z.iter().all(|&zi| zi >= q / 2.0),
        z,
        q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitVectorSource {
    /// `u = HDx` for a random sparse unit `x`, resampled until `‖u‖∞ ≤ s`.
    Smooth,
    /// A standard basis vector; as unsmooth as a unit vector can be.
    Spike,
}

fn sample_unit<R: Rng>(d: usize, s: f64, source: UnitVectorSource, rng: &mut R) -> Result<Vec<f64>> {
    match source {
        UnitVectorSource::Spike => {
            let mut u = vec![0.0; d];
            u[rng.random_range(0..d)] = 1.0;
            Ok(u)
        }
        UnitVectorSource::Smooth => {
            for _ in 0..SMOOTH_ATTEMPTS {
                let support = rng.random_range(1..=d.min(8));
                let mut x = vec![0.0; d];
                for _ in 0..support {
                    x[rng.random_range(0..d)] = StandardNormal.sample(rng);
                }
                let len = norm(&x);
                if len == 0.0 {
                    continue;
                }
                x.iter_mut().for_each(|v| *v /= len);
                let u = SignDiagonal::sample(d, rng).hd(&x)?;
                if u.iter().all(|v| v.abs() <= s) {
                    return Ok(u);
                }
            }
            Err(Error::NoSmoothDiagonal(SMOOTH_ATTEMPTS))
        }
    }
}

/// Frequency with which some `Z_i` falls below `q/2`, against the `1/20` budget.
pub fn mc_zi_concentration(
    q: f64,
    d: usize,
    k: usize,
    s: f64,
    trials: usize,
    source: UnitVectorSource,
    seed: RngSeed,
) -> Result<McEstimate> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(domain("q", q, "(0, 1]"));
    }
    if !d.is_power_of_two() {
        return Err(Error::NonPowerOfTwo(d));
    }
    if k == 0 {
        return Err(domain("k", 0.0, "[1, inf)"));
    }
    if !(s > 0.0) {
        return Err(domain("s", s, "(0, inf)"));
    }
    let outcomes = run_trials(seed, trials, |_, stream| -> Result<bool> {
        let mut rng = stream.rng();
        let u = sample_unit(d, s, source, &mut rng)?;
        let pattern = SparseProjection::sample_pattern(k, d, q, &mut rng)?;
        Ok(!zi_report(&pattern, &u).all_above_half_q)
    });
    let failures = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
    Ok(McEstimate::new(
        failures.iter().filter(|&&f| f).count() as u64,
        trials as u64,
        Some(TailBound::budget(FormulaId::RowEnergyFailure, ZI_FAILURE_BUDGET)),
    ))
}
