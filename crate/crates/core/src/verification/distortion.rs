use serde::{Deserialize, Serialize};

use super::{find_smooth_diagonal, run_trials, McEstimate};
use crate::bounds::{FormulaId, TailBound};
use crate::error::{Error, Result};
use crate::fjlt::SparseProjection;
use crate::model::{dist, norm, DataSet, EmbedParams, RngSeed};

const SMOOTH_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub k: usize,
    pub epsilon: f64,
    pub pairs: usize,
    /// Every (pair, resampling) counted separately.
    pub pooled: McEstimate,
    /// The pair that left the `(1 ± ε)` band most often.
    pub worst_pair: McEstimate,
    /// Indices of the worst pair; `None` stands for the zero vector.
    pub worst_pair_index: (usize, Option<usize>),
    /// `ln(p_hat) / (k ε²)` of the pooled estimate, when it is nonzero.
    pub fitted_exponent: Option<f64>,
    pub smooth_attempts: usize,
}

/// Distortion failure rates over resamplings of `P` with one smooth `D` held fixed.
///
/// Pairs range over `X ∪ {0}`, skipping zero difference vectors. The analytic
/// bound attached to both estimates is the failure budget `δ`.
pub fn mc_distortion(
    params: &EmbedParams,
    data: &DataSet,
    trials: usize,
    seed: RngSeed,
) -> Result<DistortionReport> {
    Ok(mc_distortion_sweep(params, data, &[params.k], trials, seed)?.remove(0))
}

/// [`mc_distortion`] at several target dimensions, sharing the same smooth `D`.
pub fn mc_distortion_sweep(
    params: &EmbedParams,
    data: &DataSet,
    ks: &[usize],
    trials: usize,
    seed: RngSeed,
) -> Result<Vec<DistortionReport>> {
    if data.d() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: data.d(),
        });
    }
    let (signs, attempts) = find_smooth_diagonal(data, params.s, seed.derive(0), SMOOTH_ATTEMPTS)?;
    let transformed: Vec<Vec<f64>> = data
        .points()
        .map(|x| signs.hd(x))
        .collect::<Result<_>>()?;

    let n = data.n();
    let mut pairs: Vec<(usize, Option<usize>, f64)> = Vec::new();
    for i in 0..n {
        let len = norm(data.point(i));
        if len > 0.0 {
            pairs.push((i, None, len));
        }
        for j in i + 1..n {
            let len = dist(data.point(i), data.point(j));
            if len > 0.0 {
                pairs.push((i, Some(j), len));
            }
        }
    }

    ks.iter()
        .enumerate()
        .map(|(sweep_index, &k)| {
            let eps = params.epsilon;
            let scale = 1.0 / (k as f64).sqrt();
            let stream = seed.derive(1 + sweep_index as u64);
            let per_trial = run_trials(stream, trials, |_, trial_seed| -> Result<Vec<u32>> {
                let p = SparseProjection::sample(k, params.d, params.q, &mut trial_seed.rng())?;
                let mut images = vec![0.0; n * k];
                for (u, out) in transformed.iter().zip(images.chunks_exact_mut(k)) {
                    p.multiply_into(u, out);
                    out.iter_mut().for_each(|v| *v *= scale);
                }
                let image = |i: usize| &images[i * k..(i + 1) * k];
                Ok(pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, &(i, j, len))| {
                        let embedded = match j {
                            Some(j) => dist(image(i), image(j)),
                            None => norm(image(i)),
                        };
                        embedded < (1.0 - eps) * len || embedded > (1.0 + eps) * len
                    })
                    .map(|(idx, _)| idx as u32)
                    .collect())
            });
            let mut per_pair = vec![0u64; pairs.len()];
            for failing in per_trial {
                for idx in failing? {
                    per_pair[idx as usize] += 1;
                }
            }
            let total: u64 = per_pair.iter().sum();
            let (worst_idx, worst_count) = per_pair
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, &c)| (i, c))
                .unwrap_or((0, 0));
            let budget = TailBound::budget(FormulaId::FailureBudget, params.delta);
            let pooled = McEstimate::new(total, (pairs.len() * trials) as u64, Some(budget.clone()));
            let fitted_exponent = (pooled.p_hat > 0.0).then(|| pooled.p_hat.ln() / (k as f64 * eps * eps));
            Ok(DistortionReport {
                k,
                epsilon: eps,
                pairs: pairs.len(),
                pooled,
                worst_pair: McEstimate::new(worst_count, trials as u64, Some(budget)),
                worst_pair_index: pairs.get(worst_idx).map_or((0, None), |p| (p.0, p.1)),
                fitted_exponent,
                smooth_attempts: attempts,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_dataset, select_params, Constants};
    use rand::Rng;

    fn random_set(seed: u64, n: usize, d: usize) -> DataSet {
        let mut rng = RngSeed(seed).rng();
        make_dataset(&(0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect::<Vec<Vec<f64>>>()).unwrap()
    }

    #[test]
    fn large_epsilon_rarely_fails() {
        let ds = random_set(1, 16, 128);
        let c = Constants { c_sparsity: 1.0, c_dim: 1.5, ..Constants::default() };
        let p = select_params(16, 128, 0.9, 0.1, 16.0, c).unwrap();
        let r = mc_distortion(&p, &ds, 50, RngSeed(3)).unwrap();
        assert!(r.pooled.p_hat < 1e-3, "p_hat {}", r.pooled.p_hat);
        assert_eq!(r.pairs, 16 + 16 * 15 / 2);
    }

    #[test]
    fn zero_differences_are_excluded() {
        let mut raw = vec![vec![0.0; 8]];
        raw.push(vec![1.0; 8]);
        raw.push(vec![1.0; 8]);
        let ds = make_dataset(&raw).unwrap();
        let p = select_params(3, 8, 0.5, 0.1, 2.0, Constants::default()).unwrap();
        let r = mc_distortion(&p, &ds, 5, RngSeed(3)).unwrap();
        // Nonzero vectors: points 1 and 2; pairs (0,1) and (0,2). Point 0 is the origin.
        assert_eq!(r.pairs, 4);
    }

    #[test]
    fn failure_rate_falls_with_k() {
        let ds = random_set(2, 24, 256);
        let p = select_params(24, 256, 0.5, 0.1, 4.0, Constants::default()).unwrap();
        let sweep = mc_distortion_sweep(&p, &ds, &[4, 16, 64], 40, RngSeed(8)).unwrap();
        assert!(sweep[0].pooled.p_hat > sweep[1].pooled.p_hat);
        assert!(sweep[1].pooled.p_hat >= sweep[2].pooled.p_hat);
        assert!(sweep.iter().all(|r| r.smooth_attempts == sweep[0].smooth_attempts));
    }

    #[test]
    fn deterministic() {
        let ds = random_set(3, 10, 64);
        let p = select_params(10, 64, 0.3, 0.1, 4.0, Constants::default()).unwrap();
        assert_eq!(
            mc_distortion(&p, &ds, 20, RngSeed(4)).unwrap(),
            mc_distortion(&p, &ds, 20, RngSeed(4)).unwrap()
        );
    }
}
