//! Shared domain types: datasets, embedding parameters and the seeding contract.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A finite point set in `R^d`, zero-padded so that `d` is a power of two.
///
/// Points are stored row-major in one contiguous buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
    d_orig: usize,
    labels: Option<Vec<String>>,
}

impl DataSet {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Padded dimension, always a power of two.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Dimension of the vectors as they were supplied.
    pub fn d_orig(&self) -> usize {
        self.d_orig
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Attaches one opaque label per point.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub(crate) fn set_labels(&mut self, labels: Option<Vec<String>>) {
        self.labels = labels;
    }

    /// Builds a dataset from a flat row-major buffer of `n` rows of `d_orig` values.
    pub fn from_flat(flat: &[f64], d_orig: usize) -> Result<Self> {
        if d_orig == 0 {
            return Err(Error::EmptyInput(0));
        }
        let n = flat.len() / d_orig;
        if n * d_orig != flat.len() {
            return Err(Error::RaggedInput {
                index: n,
                expected: d_orig,
                found: flat.len() - n * d_orig,
            });
        }
        if n < 2 {
            return Err(Error::EmptyInput(n));
        }
        let d = d_orig.next_power_of_two();
        let mut data = vec![0.0; n * d];
        for (i, (src, dst)) in flat
            .chunks_exact(d_orig)
            .zip(data.chunks_exact_mut(d))
            .enumerate()
        {
            if let Some(coord) = src.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { point: i, coord });
            }
            dst[..d_orig].copy_from_slice(src);
        }
        Ok(DataSet {
            data,
            n,
            d,
            d_orig,
            labels: None,
        })
    }
}

/// Validates raw points and zero-pads them to the next power of two.
pub fn make_dataset<V: AsRef<[f64]>>(raw_points: &[V]) -> Result<DataSet> {
    if raw_points.len() < 2 {
        return Err(Error::EmptyInput(raw_points.len()));
    }
    let d_orig = raw_points[0].as_ref().len();
    if d_orig == 0 {
        return Err(Error::RaggedInput {
            index: 0,
            expected: 1,
            found: 0,
        });
    }
    let mut flat = Vec::with_capacity(raw_points.len() * d_orig);
    for (index, p) in raw_points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != d_orig {
            return Err(Error::RaggedInput {
                index,
                expected: d_orig,
                found: p.len(),
            });
        }
        flat.extend_from_slice(p);
    }
    DataSet::from_flat(&flat, d_orig)
}

/// The universal constants the theory leaves unspecified, plus the smoothness constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// `c` in `s = sqrt(c ln(n²d) / d)`.
    pub c_smooth: f64,
    /// `c'` in `q = min(c' s², 1)`.
    pub c_sparsity: f64,
    /// Multiplier on the target dimension `k`.
    pub c_dim: f64,
}

impl Constants {
    pub const DEFAULT_C_SMOOTH: f64 = 7.0;
    /// Defaults below come from `verification::calibrate` at its default config;
    /// see the README for the sweep and its margins.
    pub const DEFAULT_C_SPARSITY: f64 = 0.5;
    pub const DEFAULT_C_DIM: f64 = 0.5;
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_smooth: Self::DEFAULT_C_SMOOTH,
            c_sparsity: Self::DEFAULT_C_SPARSITY,
            c_dim: Self::DEFAULT_C_DIM,
        }
    }
}

/// Everything needed to sample a transform for a given dataset size and accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedParams {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub s: f64,
    pub q: f64,
    pub k: usize,
    pub constants: Constants,
}

impl EmbedParams {
    /// True when `s > 3/√d`, the range where the Khintchine smoothness tail holds.
    pub fn khintchine_applicable(&self) -> bool {
        self.s > 3.0 / (self.d as f64).sqrt()
    }

    /// False when `k ≥ d`, i.e. the map does not reduce dimension.
    pub fn reduces_dimension(&self) -> bool {
        self.k < self.d
    }

    /// Expected number of nonzeros in the sparse projection, `k·d·q`.
    pub fn expected_nnz(&self) -> f64 {
        self.k as f64 * self.d as f64 * self.q
    }

    /// Same parameters with a different target dimension; `s` and `q` are unchanged.
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k.max(1);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !self.d.is_power_of_two() {
            return Err(Error::NonPowerOfTwo(self.d));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(domain("q", self.q, "(0, 1]"));
        }
        if self.k == 0 {
            return Err(domain("k", 0.0, "[1, inf)"));
        }
        Ok(())
    }
}

/// Smoothness level `s = sqrt(c ln(n²d) / d)`, clamped to 1.
pub fn smoothness_level(n: usize, d: usize, c_smooth: f64) -> f64 {
    let n = n as f64;
    let d = d as f64;
    (c_smooth * (n * n * d).ln() / d).sqrt().min(1.0)
}

/// Target dimension `ceil(c_dim · ln(2/ε)/ε² · ln(1/δ) · max(1, log₂ λ))`, at least 1.
pub fn target_dimension(epsilon: f64, delta: f64, lambda: f64, c_dim: f64) -> usize {
    let raw = c_dim * (2.0 / epsilon).ln() / (epsilon * epsilon)
        * (1.0 / delta).ln()
        * lambda.log2().max(1.0);
    (raw.ceil() as usize).max(1)
}

pub fn select_params(
    n: usize,
    d: usize,
    epsilon: f64,
    delta: f64,
    lambda: f64,
    constants: Constants,
) -> Result<EmbedParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("epsilon", epsilon, "(0, 1)"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(domain("delta", delta, "(0, 1/2)"));
    }
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(domain("lambda", lambda, "[1, inf)"));
    }
    if n < 2 {
        return Err(domain("n", n as f64, "[2, inf)"));
    }
    if !d.is_power_of_two() {
        return Err(Error::NonPowerOfTwo(d));
    }
    if (n as f64).powi(2) * (d as f64) < 3.7 {
        return Err(domain("n^2 d", (n * n * d) as f64, "[3.7, inf)"));
    }
    let Constants {
        c_smooth,
        c_sparsity,
        c_dim,
    } = constants;
    if !(c_smooth > 0.0) || !c_smooth.is_finite() {
        return Err(domain("c_smooth", c_smooth, "(0, inf)"));
    }
    if !(c_sparsity > 0.0) || !c_sparsity.is_finite() {
        return Err(domain("c_sparsity", c_sparsity, "(0, inf)"));
    }
    if !(c_dim > 0.0) || !c_dim.is_finite() {
        return Err(domain("c_dim", c_dim, "(0, inf)"));
    }

    let s = smoothness_level(n, d, c_smooth);
    let q = (c_sparsity * s * s).min(1.0);
    let k = target_dimension(epsilon, delta, lambda, c_dim);
    let params = EmbedParams {
        n,
        d,
        epsilon,
        delta,
        lambda,
        s,
        q,
        k,
        constants,
    };
    if !params.reduces_dimension() {
        log::warn!("target dimension k = {k} is not below d = {d}; no dimension reduction");
    }
    Ok(params)
}

/// Root seed for every randomized object in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for stream `index`; depends only on `(self, index)`.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x6a09_e667_f3bc_c909))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pads_to_power_of_two() {
        let raw: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..5).map(|j| (i * 5 + j) as f64 + 1.0).collect())
            .collect();
        let ds = make_dataset(&raw).unwrap();
        assert_eq!(ds.d(), 8);
        assert_eq!(ds.d_orig(), 5);
        assert_eq!(ds.n(), 3);
        for (p, r) in ds.points().zip(&raw) {
            assert_eq!(&p[..5], r.as_slice());
            assert_eq!(&p[5..], &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn power_of_two_left_unchanged() {
        let raw = vec![vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, 0.5, 0.25, 8.0]];
        let ds = make_dataset(&raw).unwrap();
        assert_eq!(ds.d(), 4);
        assert_eq!(ds.point(1), raw[1].as_slice());
    }

    #[test]
    fn rejects_bad_input() {
        let nan = vec![vec![1.0], vec![2.0], vec![f64::NAN]];
        assert!(matches!(
            make_dataset(&nan),
            Err(Error::NonFinite { point: 2, coord: 0 })
        ));
        assert!(matches!(
            make_dataset(&[vec![1.0]]),
            Err(Error::EmptyInput(1))
        ));
        assert!(matches!(
            make_dataset(&[vec![1.0, 2.0], vec![1.0]]),
            Err(Error::RaggedInput { index: 1, .. })
        ));
        let inf = vec![vec![1.0, f64::INFINITY], vec![0.0, 0.0]];
        assert!(matches!(make_dataset(&inf), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn smoothness_level_matches_high_precision_value() {
        // sqrt(7 ln(1024e6) / 1024), evaluated at 40 digits.
        let c = Constants { c_sparsity: 1.0, ..Constants::default() };
        let p = select_params(1000, 1024, 0.5, 0.1, 4.0, c).unwrap();
        assert!((p.s - 0.376_596_700_398_349_1).abs() < 1e-14);
        assert!((p.q - 0.141_825_074_750_923_9).abs() < 1e-14);
        assert!(p.khintchine_applicable());
    }

    #[test]
    fn target_dimension_formula() {
        // ln(4)/0.25 · ln(10) · log2(4) = 25.536...
        let c = Constants {
            c_dim: 1.0,
            ..Constants::default()
        };
        let p = select_params(1000, 1024, 0.5, 0.1, 4.0, c).unwrap();
        assert_eq!(p.k, 26);
        // λ = 1 still gives a positive k because of the floor on log₂ λ.
        let p1 = select_params(1000, 1024, 0.5, 0.1, 1.0, c).unwrap();
        assert_eq!(p1.k, 13);
    }

    #[test]
    fn sparsity_clamps_at_boundary() {
        let s = smoothness_level(100, 4096, 7.0);
        let c = Constants {
            c_sparsity: 1.0 / (s * s),
            ..Constants::default()
        };
        let p = select_params(100, 4096, 0.5, 0.1, 2.0, c).unwrap();
        assert!(p.q <= 1.0);
        assert!((p.q - 1.0).abs() < 1e-15);
        let big = Constants {
            c_sparsity: 10.0 / (s * s),
            ..Constants::default()
        };
        assert_eq!(select_params(100, 4096, 0.5, 0.1, 2.0, big).unwrap().q, 1.0);
    }

    #[test]
    fn parameter_domain_errors() {
        let c = Constants::default();
        assert!(matches!(
            select_params(10, 16, 1.5, 0.1, 2.0, c),
            Err(Error::Domain { name: "epsilon", .. })
        ));
        assert!(matches!(
            select_params(10, 16, 0.5, 0.5, 2.0, c),
            Err(Error::Domain { name: "delta", .. })
        ));
        assert!(matches!(
            select_params(10, 16, 0.5, 0.1, 0.5, c),
            Err(Error::Domain { name: "lambda", .. })
        ));
        assert!(matches!(
            select_params(10, 12, 0.5, 0.1, 2.0, c),
            Err(Error::NonPowerOfTwo(12))
        ));
        assert!(matches!(
            select_params(1, 16, 0.5, 0.1, 2.0, c),
            Err(Error::Domain { name: "n", .. })
        ));
    }

    #[test]
    fn no_reduction_is_flagged_not_rejected() {
        let p = select_params(4, 8, 0.1, 0.01, 16.0, Constants::default()).unwrap();
        assert!(!p.reduces_dimension());
    }

    #[test]
    fn derived_seeds_are_distinct_and_stable() {
        let root = RngSeed(7);
        assert_eq!(root.derive(3), RngSeed(7).derive(3));
        let seeds: std::collections::HashSet<_> = (0..1000).map(|i| root.derive(i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    proptest! {
        #[test]
        fn k_monotone_in_lambda_and_epsilon(
            eps in 0.05f64..0.95,
            eps_step in 0.0f64..0.5,
            delta in 0.01f64..0.49,
            lam in 1.0f64..1e6,
            lam_step in 0.0f64..1e6,
        ) {
            let c = Constants::default();
            let base = select_params(100, 256, eps, delta, lam, c).unwrap();
            let more_lambda = select_params(100, 256, eps, delta, lam + lam_step, c).unwrap();
            prop_assert!(more_lambda.k >= base.k);
            let eps2 = (eps + eps_step).min(0.99);
            let more_eps = select_params(100, 256, eps2, delta, lam, c).unwrap();
            prop_assert!(more_eps.k <= base.k);
        }

        #[test]
        fn padding_preserves_distances(
            a in proptest::collection::vec(-1e3f64..1e3, 5),
            b in proptest::collection::vec(-1e3f64..1e3, 5),
        ) {
            let ds = make_dataset(&[a.clone(), b.clone()]).unwrap();
            prop_assert_eq!(dist(ds.point(0), ds.point(1)), dist(&a, &b));
        }
    }
}
