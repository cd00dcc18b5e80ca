use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{run_trials, McEstimate};
use crate::bounds::shrinkage_bound;
use crate::error::{Error, Result};
use crate::fjlt::{SignDiagonal, SparseProjection};
use crate::model::{norm, EmbedParams, RngSeed};

const SMOOTH_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageReport {
    pub epsilon: f64,
    pub k: usize,
    pub estimate: McEstimate,
    pub smooth_attempts: usize,
}

/// Frequency of `‖Φx‖ ≤ ε` for a fixed unit `x`, resampling only `P`.
///
/// `x` is a random Gaussian direction drawn from `seed`; `D` is resampled until `HDx`
/// is `s`-smooth and then held fixed.
pub fn mc_shrinkage(params: &EmbedParams, trials: usize, seed: RngSeed) -> Result<ShrinkageReport> {
    let bound = shrinkage_bound(params.epsilon, params.k)?;
    let d = params.d;
    let mut rng = seed.derive(0).rng();
    let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let len = norm(&x);
    x.iter_mut().for_each(|v| *v /= len);

    let mut found = None;
    for attempt in 1..=SMOOTH_ATTEMPTS {
        let u = SignDiagonal::sample(d, &mut rng).hd(&x)?;
        if u.iter().all(|v| v.abs() <= params.s) {
            found = Some((u, attempt));
            break;
        }
    }
    let (u, attempts) = found.ok_or(Error::NoSmoothDiagonal(SMOOTH_ATTEMPTS))?;

    let k = params.k;
    let threshold = params.epsilon * params.epsilon * k as f64;
    let outcomes = run_trials(seed.derive(1), trials, |_, stream| -> Result<bool> {
        let p = SparseProjection::sample(k, d, params.q, &mut stream.rng())?;
        let mut y = vec![0.0; k];
        p.multiply_into(&u, &mut y);
        // ‖k^{-1/2} P u‖² ≤ ε²  ⇔  ‖P u‖² ≤ k ε²
        Ok(y.iter().map(|v| v * v).sum::<f64>() <= threshold)
    });
    let hits = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
    Ok(ShrinkageReport {
        epsilon: params.epsilon,
        k,
        estimate: McEstimate::new(
            hits.iter().filter(|&&h| h).count() as u64,
            trials as u64,
            Some(bound),
        ),
        smooth_attempts: attempts,
    })
}
