//! Monte-Carlo checks of every probabilistic guarantee behind the embedding.
//!
//! Each trial draws from its own stream `seed.derive(index)`, so results depend only
//! on the master seed and trial count, never on the thread count.

mod appendix;
mod calibration;
mod distortion;
mod nn;
mod shrinkage;
mod smoothness;
mod zi;

pub use appendix::{mc_gaussian_dominance, mc_two_stability, ks_threshold, DominanceReport, StabilityReport};
pub use calibration::{calibrate, CalibrationConfig, CalibrationReport, CalibrationStep};
pub use distortion::{mc_distortion, mc_distortion_sweep, DistortionReport};
pub use nn::{mc_nn_preservation, verify_nn_preservation, NnGroundTruth, NnMonteCarloReport, NnPreservationReport, PointResult, Witness};
pub use shrinkage::{mc_shrinkage, ShrinkageReport};
pub use smoothness::{check_smoothness, find_smooth_diagonal, mc_smoothness, PairMode, SmoothnessReport};
pub use zi::{mc_zi_concentration, zi_report, UnitVectorSource, ZiReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::TailBound;
use crate::model::RngSeed;

/// Number of standard errors of slack on every one-sided comparison.
pub const SLACK_SE: f64 = 3.0;

/// Empirical frequency of an event over independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: u64,
    /// Number of trials in which the event occurred.
    pub successes: u64,
    pub p_hat: f64,
    pub std_err: f64,
    pub analytic_bound: Option<TailBound>,
}

impl McEstimate {
    pub fn new(successes: u64, trials: u64, analytic_bound: Option<TailBound>) -> Self {
        let p_hat = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        let std_err = if trials == 0 {
            0.0
        } else {
            (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
        };
        McEstimate {
            trials,
            successes,
            p_hat,
            std_err,
            analytic_bound,
        }
    }

    /// `p_hat ≤ bound + 3·std_err`; `None` without an analytic bound.
    pub fn within_bound(&self) -> Option<bool> {
        self.analytic_bound
            .as_ref()
            .map(|b| self.p_hat <= b.value + SLACK_SE * self.std_err)
    }
}

/// Runs `trials` independent trials in parallel, returning results in trial order.
pub(crate) fn run_trials<T, F>(seed: RngSeed, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, RngSeed) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, seed.derive(t as u64)))
        .collect()
}
