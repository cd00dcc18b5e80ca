use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_trials, McEstimate};
use crate::bounds::dataset_smoothness_failure_bound;
use crate::error::{Error, Result};
use crate::fjlt::SignDiagonal;
use crate::model::{dist, norm, DataSet, RngSeed};

/// Largest dataset for exhaustive pair checking.
pub const EXHAUSTIVE_MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Every pair of `X ∪ {0}`.
    Exhaustive,
    /// Uniformly sampled pairs of `X ∪ {0}`.
    Sampled { pairs: usize, seed: RngSeed },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub s: f64,
    /// `max ‖HD(x-y)‖∞ / ‖x-y‖₂` over probed pairs with `x ≠ y`.
    pub max_ratio: f64,
    pub is_smooth: bool,
    pub pairs_probed: usize,
    pub exhaustive: bool,
    /// Indices of the worst pair; `None` stands for the zero vector.
    pub worst_pair: Option<(usize, Option<usize>)>,
}

/// Checks whether `D` puts every difference vector of `X ∪ {0}` in the `s`-smooth setting.
///
/// `HD(x - y)` is formed as `HDx - HDy`, so each point is transformed once.
pub fn check_smoothness(
    signs: &SignDiagonal,
    data: &DataSet,
    s: f64,
    mode: PairMode,
) -> Result<SmoothnessReport> {
    if signs.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            found: signs.len(),
        });
    }
    let n = data.n();
    if matches!(mode, PairMode::Exhaustive) && n > EXHAUSTIVE_MAX_POINTS {
        return Err(Error::TooLarge {
            what: "exhaustive smoothness check",
            size: n,
            limit: EXHAUSTIVE_MAX_POINTS,
        });
    }
    let transformed: Vec<Vec<f64>> = data
        .points()
        .map(|x| signs.hd(x))
        .collect::<Result<_>>()?;

    let mut max_ratio = 0.0f64;
    let mut worst = None;
    let mut probed = 0usize;
    let mut probe = |i: usize, j: Option<usize>| {
        let len = match j {
            Some(j) => dist(data.point(i), data.point(j)),
            None => norm(data.point(i)),
        };
        if len == 0.0 {
            return;
        }
        let ui = &transformed[i];
        let sup = match j {
            Some(j) => ui
                .iter()
                .zip(&transformed[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            None => ui.iter().map(|a| a.abs()).fold(0.0, f64::max),
        };
        probed += 1;
        let ratio = sup / len;
        if ratio > max_ratio {
            max_ratio = ratio;
            worst = Some((i, j));
        }
    };

    let exhaustive = match mode {
        PairMode::Exhaustive => {
            for i in 0..n {
                probe(i, None);
                for j in i + 1..n {
                    probe(i, Some(j));
                }
            }
            true
        }
        PairMode::Sampled { pairs, seed } => {
            let mut rng = seed.rng();
            // Index n stands for the zero vector.
            for _ in 0..pairs {
                let a = rng.random_range(0..=n);
                let b = rng.random_range(0..=n);
                match (a.min(b), a.max(b)) {
                    (lo, hi) if lo == hi => {}
                    (lo, hi) if hi == n => probe(lo, None),
                    (lo, hi) => probe(lo, Some(hi)),
                }
            }
            false
        }
    };
    Ok(SmoothnessReport {
        s,
        max_ratio,
        is_smooth: max_ratio <= s,
        pairs_probed: probed,
        exhaustive,
        worst_pair: worst,
    })
}

fn default_mode(data: &DataSet, seed: RngSeed) -> PairMode {
    if data.n() <= EXHAUSTIVE_MAX_POINTS {
        PairMode::Exhaustive
    } else {
        PairMode::Sampled {
            pairs: 200_000,
            seed,
        }
    }
}

/// Samples sign diagonals from `seed` until one is `s`-smooth for `data`.
///
/// Returns the diagonal and the number of attempts used.
pub fn find_smooth_diagonal(
    data: &DataSet,
    s: f64,
    seed: RngSeed,
    max_attempts: usize,
) -> Result<(SignDiagonal, usize)> {
    for attempt in 0..max_attempts {
        let stream = seed.derive(attempt as u64);
        let signs = SignDiagonal::sample(data.d(), &mut stream.rng());
        let report = check_smoothness(&signs, data, s, default_mode(data, stream.derive(1)))?;
        if report.is_smooth {
            return Ok((signs, attempt + 1));
        }
    }
    Err(Error::NoSmoothDiagonal(max_attempts))
}

/// Frequency with which a fresh `D` fails the `s`-smooth setting, against `exp(-c/2.2)`.
pub fn mc_smoothness(
    data: &DataSet,
    s: f64,
    c_smooth: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<McEstimate> {
    let bound = dataset_smoothness_failure_bound(data.n(), data.d(), c_smooth)?;
    let outcomes = run_trials(seed, trials, |_, stream| {
        let signs = SignDiagonal::sample(data.d(), &mut stream.rng());
        check_smoothness(&signs, data, s, default_mode(data, stream.derive(1)))
            .map(|r| !r.is_smooth)
    });
    let failures = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
    Ok(McEstimate::new(
        failures.iter().filter(|&&f| f).count() as u64,
        trials as u64,
        Some(bound),
    ))
}
