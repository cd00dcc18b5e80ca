//! Exact nearest neighbors and doubling-constant estimation.
//!
//! Balls are closed, and every distance comparison allows a relative slack of
//! [`DIST_TOL`] so that covers do not flip on rounding noise at boundary radii.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dist, DataSet};

pub const DIST_TOL: f64 = 1e-9;

/// Largest dataset accepted by [`doubling_constant_exact`].
pub const EXACT_MAX_POINTS: usize = 16;

#[inline]
fn within(distance: f64, radius: f64) -> bool {
    distance <= radius * (1.0 + DIST_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnTable {
    pub nn_index: Vec<usize>,
    pub nn_distance: Vec<f64>,
}

impl NnTable {
    pub fn len(&self) -> usize {
        self.nn_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nn_index.is_empty()
    }
}

/// Exact all-pairs nearest neighbor of every point, ties to the smallest index.
pub fn brute_force_nn(data: &DataSet) -> NnTable {
    let (nn_index, nn_distance) = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let x = data.point(i);
            let mut best = (usize::MAX, f64::INFINITY);
            for (j, y) in data.points().enumerate() {
                if j == i {
                    continue;
                }
                let dj = dist(x, y);
                if dj < best.1 {
                    best = (j, dj);
                }
            }
            best
        })
        .unzip();
    NnTable {
        nn_index,
        nn_distance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoublingMethod {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverWitness {
    pub center: usize,
    pub radius: f64,
    pub cover_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub lambda: usize,
    pub method: DoublingMethod,
    /// Greedy estimates overshoot the optimal cover; this flags the value as an upper bound.
    pub upper_bound: bool,
    pub radii_probed: Vec<f64>,
    pub witness: Option<CoverWitness>,
}

impl DoublingEstimate {
    pub fn doubling_dimension(&self) -> f64 {
        (self.lambda as f64).log2()
    }
}

fn distance_matrix(data: &DataSet) -> Vec<f64> {
    let n = data.n();
    let mut m = vec![0.0; n * n];
    m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = data.point(i);
        for (j, slot) in row.iter_mut().enumerate() {
            if j != i {
                *slot = dist(x, data.point(j));
            }
        }
    });
    m
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Exact doubling constant with cover centers restricted to points of the dataset.
///
/// For each center `x`, the covered set `B(x, r) ∩ X` only changes at the distances
/// from `x`, and enlarging the half-radius balls can only shrink the cover, so
/// probing every pairwise distance as `r` attains the maximum.
pub fn doubling_constant_exact(data: &DataSet) -> Result<DoublingEstimate> {
    let n = data.n();
    if n > EXACT_MAX_POINTS {
        return Err(Error::TooLarge {
            what: "exact doubling constant",
            size: n,
            limit: EXACT_MAX_POINTS,
        });
    }
    let dm = distance_matrix(data);
    let radii = sorted_unique(dm.iter().copied().filter(|&v| v > 0.0).collect());

    let mut best = CoverWitness {
        center: 0,
        radius: 0.0,
        cover_size: 1,
    };
    for center in 0..n {
        for &r in &radii {
            let ball: u32 = (0..n)
                .filter(|&p| within(dm[center * n + p], r))
                .fold(0, |m, p| m | (1 << p));
            let covers: Vec<u32> = (0..n)
                .map(|z| {
                    (0..n)
                        .filter(|&p| ball & (1 << p) != 0 && within(dm[z * n + p], r / 2.0))
                        .fold(0, |m, p| m | (1 << p))
                })
                .collect();
            let size = min_cover(ball, &covers);
            if size > best.cover_size {
                best = CoverWitness {
                    center,
                    radius: r,
                    cover_size: size,
                };
            }
        }
    }
    Ok(DoublingEstimate {
        lambda: best.cover_size,
        method: DoublingMethod::Exact,
        upper_bound: false,
        radii_probed: radii,
        witness: Some(best),
    })
}

/// Minimum number of sets from `covers` whose union contains `target`.
fn min_cover(target: u32, covers: &[u32]) -> usize {
    fn search(uncovered: u32, covers: &[u32], depth: usize, limit: usize) -> bool {
        if uncovered == 0 {
            return true;
        }
        if depth == limit {
            return false;
        }
        // Some chosen set must contain the lowest uncovered element.
        let p = uncovered.trailing_zeros();
        covers
            .iter()
            .filter(|&&c| c & (1 << p) != 0)
            .any(|&c| search(uncovered & !c, covers, depth + 1, limit))
    }
    (0..=target.count_ones() as usize)
        .find(|&limit| search(target, covers, 0, limit))
        .unwrap_or(target.count_ones() as usize)
}

/// Greedy upper estimate of the doubling constant.
///
/// Up to `sample_centers` centers are taken at an even stride over the point order.
/// For each center, `radii_per_scale` geometric scales between its smallest and
/// largest positive distance are each snapped up to the next actual distance from
/// the center, which is where the covered set changes. When both counts are at least
/// `n`, every center and every breakpoint is probed and the estimate dominates the
/// exact value.
pub fn doubling_constant_greedy(
    data: &DataSet,
    radii_per_scale: usize,
    sample_centers: usize,
) -> DoublingEstimate {
    let n = data.n();
    let dm = distance_matrix(data);
    let centers: Vec<usize> = if sample_centers >= n || sample_centers == 0 {
        (0..n).collect()
    } else {
        (0..sample_centers).map(|i| i * n / sample_centers).collect()
    };
    let radii_per_scale = radii_per_scale.max(1);

    let per_center: Vec<(CoverWitness, Vec<f64>)> = centers
        .par_iter()
        .map(|&center| {
            let row = &dm[center * n..(center + 1) * n];
            let dists = sorted_unique(row.iter().copied().filter(|&v| v > 0.0).collect());
            let radii = snapped_scales(&dists, radii_per_scale);
            let mut best = CoverWitness {
                center,
                radius: 0.0,
                cover_size: 1,
            };
            for &r in &radii {
                let size = greedy_cover(&dm, n, center, r);
                if size > best.cover_size {
                    best = CoverWitness {
                        center,
                        radius: r,
                        cover_size: size,
                    };
                }
            }
            (best, radii)
        })
        .collect();

    let mut witness = CoverWitness {
        center: 0,
        radius: 0.0,
        cover_size: 1,
    };
    let mut radii_probed = Vec::new();
    for (w, radii) in per_center {
        if w.cover_size > witness.cover_size {
            witness = w;
        }
        radii_probed.extend(radii);
    }
    DoublingEstimate {
        lambda: witness.cover_size,
        method: DoublingMethod::Greedy,
        upper_bound: true,
        radii_probed: sorted_unique(radii_probed),
        witness: Some(witness),
    }
}

fn snapped_scales(dists: &[f64], count: usize) -> Vec<f64> {
    if dists.len() <= count {
        return dists.to_vec();
    }
    let (lo, hi) = (dists[0], dists[dists.len() - 1]);
    let mut out: Vec<f64> = (0..count)
        .map(|i| {
            let t = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            let scale = lo * (hi / lo).powf(t);
            let idx = dists.partition_point(|&v| v < scale * (1.0 - DIST_TOL));
            dists[idx.min(dists.len() - 1)]
        })
        .collect();
    out.dedup();
    out
}

/// Greedy set cover of `B(center, r)` by balls of radius `r/2` centered at any point.
fn greedy_cover(dm: &[f64], n: usize, center: usize, r: f64) -> usize {
    let members: Vec<usize> = (0..n).filter(|&p| within(dm[center * n + p], r)).collect();
    // Only points within 1.5r of the center can reach the ball.
    let candidates: Vec<usize> = (0..n)
        .filter(|&z| within(dm[center * n + z], 1.5 * r))
        .collect();
    let half = r / 2.0;
    let mut uncovered = vec![true; members.len()];
    let mut left = members.len();
    let mut count = 0;
    while left > 0 {
        let mut best = (0usize, usize::MAX);
        for &z in &candidates {
            let gain = members
                .iter()
                .zip(&uncovered)
                .filter(|&(&p, &u)| u && within(dm[z * n + p], half))
                .count();
            if gain > best.0 {
                best = (gain, z);
            }
        }
        let z = best.1;
        for (p, u) in members.iter().zip(uncovered.iter_mut()) {
            if *u && within(dm[z * n + p], half) {
                *u = false;
                left -= 1;
            }
        }
        count += 1;
    }
    count
}
