//! Sweep of the unspecified universal constants over a fixed synthetic suite.

use serde::{Deserialize, Serialize};

use super::{mc_distortion, mc_nn_preservation, mc_zi_concentration, UnitVectorSource};
use crate::error::Result;
use crate::metric::doubling_constant_greedy;
use crate::model::{select_params, smoothness_level, Constants, RngSeed};
use crate::synthetic::{gaussian_cloud, noisy_plane};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub c_sparsity_grid: Vec<f64>,
    pub c_dim_grid: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub zi_trials: usize,
    pub distortion_points: usize,
    pub distortion_dim: usize,
    pub distortion_trials: usize,
    pub nn_points: usize,
    pub nn_dim: usize,
    pub nn_noise: f64,
    pub nn_transforms: usize,
    pub seed: RngSeed,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            c_sparsity_grid: vec![0.25, 0.5, 1.0, 2.0],
            c_dim_grid: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            epsilon: 0.5,
            delta: 0.1,
            zi_trials: 2000,
            distortion_points: 64,
            distortion_dim: 512,
            distortion_trials: 500,
            nn_points: 500,
            nn_dim: 512,
            nn_noise: 0.01,
            nn_transforms: 50,
            seed: RngSeed(2024),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub c_sparsity: f64,
    pub c_dim: f64,
    pub zi_failure: f64,
    pub zi_ok: bool,
    pub distortion_k: usize,
    pub distortion_worst_pair: f64,
    pub distortion_ok: bool,
    pub nn_k: usize,
    pub nn_joint_rate: f64,
    pub nn_ok: bool,
}

impl CalibrationStep {
    pub fn passes(&self) -> bool {
        self.zi_ok && self.distortion_ok && self.nn_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub distortion_lambda: usize,
    pub nn_lambda: usize,
    pub steps: Vec<CalibrationStep>,
    /// Smallest passing constants, sparsity first; `None` if nothing on the grid passes.
    pub selected: Option<Constants>,
}

/// Finds the smallest `c_sparsity`, then the smallest `c_dim` for it, such that the
/// row-energy, distortion and nearest-neighbor suites all pass. The nearest-neighbor
/// suite also requires `k < d/4`.
pub fn calibrate(config: &CalibrationConfig) -> Result<CalibrationReport> {
    let seed = config.seed;
    let distortion_data = gaussian_cloud(config.distortion_points, config.distortion_dim, seed.derive(0))?;
    let nn_data = noisy_plane(config.nn_points, config.nn_dim, config.nn_noise, seed.derive(1))?;
    let distortion_lambda = doubling_constant_greedy(&distortion_data, 32, 32).lambda;
    let nn_lambda = doubling_constant_greedy(&nn_data, 32, 32).lambda;

    let mut sparsity_grid = config.c_sparsity_grid.clone();
    sparsity_grid.sort_by(f64::total_cmp);
    let mut dim_grid = config.c_dim_grid.clone();
    dim_grid.sort_by(f64::total_cmp);

    let mut steps = Vec::new();
    let mut selected = None;
    'outer: for &c_sparsity in &sparsity_grid {
        for &c_dim in &dim_grid {
            let constants = Constants {
                c_sparsity,
                c_dim,
                ..Constants::default()
            };
            let s_zi = smoothness_level(1000, 1024, constants.c_smooth);
            let q_zi = (c_sparsity * s_zi * s_zi).min(1.0);
            let zi = mc_zi_concentration(q_zi, 1024, 32, s_zi, config.zi_trials, UnitVectorSource::Smooth, seed.derive(2))?;

            let dp = select_params(
                distortion_data.n(),
                distortion_data.d(),
                config.epsilon,
                config.delta,
                distortion_lambda as f64,
                constants,
            )?;
            let dist = mc_distortion(&dp, &distortion_data, config.distortion_trials, seed.derive(3))?;

            let np = select_params(nn_data.n(), nn_data.d(), config.epsilon, config.delta, nn_lambda as f64, constants)?;
            let nn = mc_nn_preservation(&nn_data, &np, config.nn_transforms, seed.derive(4))?;

            let step = CalibrationStep {
                c_sparsity,
                c_dim,
                zi_failure: zi.p_hat,
                zi_ok: zi.within_bound().unwrap_or(false),
                distortion_k: dp.k,
                distortion_worst_pair: dist.worst_pair.p_hat,
                distortion_ok: dist.worst_pair.p_hat <= config.delta,
                nn_k: np.k,
                nn_joint_rate: nn.joint_pass.p_hat,
                nn_ok: nn.meets_target() && 4 * np.k < np.d,
            };
            log::info!("calibration step {step:?}");
            let pass = step.passes();
            steps.push(step);
            if pass {
                selected = Some(constants);
                break 'outer;
            }
        }
    }
    Ok(CalibrationReport {
        config: config.clone(),
        distortion_lambda,
        nn_lambda,
        steps,
        selected,
    })
}
