use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trials, McEstimate};
use crate::bounds::{FormulaId, TailBound};
use crate::error::{domain, Error, Result};
use crate::fjlt::{FjltTransform, LinearEmbedding};
use crate::metric::{brute_force_nn, NnTable};
use crate::model::{dist, DataSet, EmbedParams, RngSeed};

/// A far point that the embedding pulled inside the `(1+ε)·nn` radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub y: usize,
    pub original_distance: f64,
    pub embedded_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub nn_index: usize,
    pub nn_distance: f64,
    pub min_embedded_distance: f64,
    /// `min_z ‖Φx - Φz‖ ≤ (1+ε)‖x - x'‖`
    pub property1: bool,
    /// No `y` with `‖x - y‖ > (1+2ε)‖x - x'‖` has `‖Φx - Φy‖ ≤ (1+ε)‖x - x'‖`.
    pub property2: bool,
    /// The violating `y` with the smallest embedded distance, when property 2 fails.
    pub witness: Option<Witness>,
}

impl PointResult {
    pub fn joint(&self) -> bool {
        self.property1 && self.property2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnPreservationReport {
    pub epsilon: f64,
    pub property1_rate: f64,
    pub property2_rate: f64,
    pub joint_rate: f64,
    pub points: Vec<PointResult>,
}

/// Original-space nearest neighbors and pairwise distances, computed once and reused
/// across many embeddings of the same dataset.
#[derive(Debug, Clone)]
pub struct NnGroundTruth {
    n: usize,
    nn: NnTable,
    distances: Vec<f64>,
}

impl NnGroundTruth {
    pub fn new(original: &DataSet) -> Self {
        let n = original.n();
        let mut distances = vec![0.0; n * n];
        distances.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = dist(original.point(i), original.point(j));
            }
        });
        NnGroundTruth {
            n,
            nn: brute_force_nn(original),
            distances,
        }
    }

    pub fn nn(&self) -> &NnTable {
        &self.nn
    }

    pub fn evaluate(&self, embedded: &DataSet, epsilon: f64) -> Result<NnPreservationReport> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain("epsilon", epsilon, "(0, 1)"));
        }
        if embedded.n() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: embedded.n(),
            });
        }
        let n = self.n;
        let points: Vec<PointResult> = (0..n)
            .into_par_iter()
            .map(|i| {
                let nn_distance = self.nn.nn_distance[i];
                let near = (1.0 + epsilon) * nn_distance;
                let far = (1.0 + 2.0 * epsilon) * nn_distance;
                let xi = embedded.point(i);
                let mut min_embedded = f64::INFINITY;
                let mut witness: Option<Witness> = None;
                for j in (0..n).filter(|&j| j != i) {
                    let e = dist(xi, embedded.point(j));
                    min_embedded = min_embedded.min(e);
                    let o = self.distances[i * n + j];
                    if o > far && e <= near && witness.is_none_or(|w| e < w.embedded_distance) {
                        witness = Some(Witness {
                            y: j,
                            original_distance: o,
                            embedded_distance: e,
                        });
                    }
                }
                PointResult {
                    nn_index: self.nn.nn_index[i],
                    nn_distance,
                    min_embedded_distance: min_embedded,
                    property1: min_embedded <= near,
                    property2: witness.is_none(),
                    witness,
                }
            })
            .collect();
        let rate = |f: &dyn Fn(&PointResult) -> bool| {
            points.iter().filter(|p| f(p)).count() as f64 / n as f64
        };
        Ok(NnPreservationReport {
            epsilon,
            property1_rate: rate(&|p| p.property1),
            property2_rate: rate(&|p| p.property2),
            joint_rate: rate(&|p| p.joint()),
            points,
        })
    }
}

/// Checks both nearest-neighbor properties for every point of `original`.
pub fn verify_nn_preservation(
    original: &DataSet,
    embedded: &DataSet,
    epsilon: f64,
) -> Result<NnPreservationReport> {
    if original.n() != embedded.n() {
        return Err(Error::SizeMismatch {
            left: original.n(),
            right: embedded.n(),
        });
    }
    NnGroundTruth::new(original).evaluate(embedded, epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnMonteCarloReport {
    pub params: EmbedParams,
    pub transforms: usize,
    /// Event: a point passes both properties in one sampled transform.
    pub joint_pass: McEstimate,
    /// Property 1 failures against half of the budget `δ`.
    pub property1_failure: McEstimate,
    /// Property 2 failures against the other half.
    pub property2_failure: McEstimate,
    pub per_transform_joint_rate: Vec<f64>,
    pub min_joint_rate: f64,
}

impl NnMonteCarloReport {
    /// Joint pass rate is at least `1 - δ` within three standard errors.
    pub fn meets_target(&self) -> bool {
        self.joint_pass.p_hat + super::SLACK_SE * self.joint_pass.std_err >= 1.0 - self.params.delta
    }
}

/// Samples `transforms` independent maps and pools the per-point outcomes.
pub fn mc_nn_preservation(
    data: &DataSet,
    params: &EmbedParams,
    transforms: usize,
    seed: RngSeed,
) -> Result<NnMonteCarloReport> {
    if data.d() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: data.d(),
        });
    }
    let truth = NnGroundTruth::new(data);
    let reports = run_trials(seed, transforms, |_, stream| -> Result<NnPreservationReport> {
        let t = FjltTransform::sample(params, stream)?;
        truth.evaluate(&t.apply_batch(data)?, params.epsilon)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let count = |f: &dyn Fn(&PointResult) -> bool| -> u64 {
        reports
            .iter()
            .flat_map(|r| &r.points)
            .filter(|p| f(p))
            .count() as u64
    };
    let total = (reports.len() * data.n()) as u64;
    let half_budget = TailBound::budget(FormulaId::FailureBudget, params.delta / 2.0);
    let per_transform: Vec<f64> = reports.iter().map(|r| r.joint_rate).collect();
    Ok(NnMonteCarloReport {
        params: *params,
        transforms,
        joint_pass: McEstimate::new(count(&|p| p.joint()), total, None),
        property1_failure: McEstimate::new(count(&|p| !p.property1), total, Some(half_budget.clone())),
        property2_failure: McEstimate::new(count(&|p| !p.property2), total, Some(half_budget)),
        min_joint_rate: per_transform.iter().copied().fold(1.0, f64::min),
        per_transform_joint_rate: per_transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_dataset;

    fn line(xs: &[f64]) -> DataSet {
        make_dataset(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_passes_everything() {
        let ds = make_dataset(&(0..30).map(|i| vec![(i as f64).sin(), (i * i % 7) as f64]).collect::<Vec<_>>()).unwrap();
        for eps in [0.01, 0.3, 0.99] {
            let r = verify_nn_preservation(&ds, &ds, eps).unwrap();
            assert_eq!(r.joint_rate, 1.0);
            assert!(r.points.iter().all(|p| p.witness.is_none()));
        }
    }

    #[test]
    fn zero_map_on_a_line() {
        let ds = line(&[0.0, 1.0, 10.0]);
        let zero = line(&[0.0, 0.0, 0.0]);
        let r = verify_nn_preservation(&ds, &zero, 0.5).unwrap();
        assert!(r.points.iter().all(|p| p.property1));
        // x=0: nn 1, y=10 is far and lands at 0. x=1: nn 1, y=10 at 9 > 2 is far.
        // x=10: nn 9, y=0 at 10 is not beyond 2·9, so nothing is far.
        assert_eq!(
            r.points.iter().map(|p| p.property2).collect::<Vec<_>>(),
            vec![false, false, true]
        );
        let w = r.points[0].witness.unwrap();
        assert_eq!((w.y, w.original_distance, w.embedded_distance), (2, 10.0, 0.0));
        assert!((r.joint_rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn size_and_domain_errors() {
        let a = line(&[0.0, 1.0, 2.0]);
        let b = line(&[0.0, 1.0]);
        assert!(matches!(
            verify_nn_preservation(&a, &b, 0.5),
            Err(Error::SizeMismatch { left: 3, right: 2 })
        ));
        assert!(verify_nn_preservation(&a, &a, 1.0).is_err());
    }
}
