//! Sampling and applying `Φ = P·H·D`, plus the dense Gaussian baseline.
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat method) driven
//! by a ChaCha8 stream seeded from [`RngSeed`], so a seed and parameter set fully
//! determine every sampled entry on every platform.

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fwht::fwht_inplace;
use crate::model::{DataSet, EmbedParams, RngSeed};

/// A linear map `R^d → R^k` that can be applied point by point.
pub trait LinearEmbedding: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    /// Writes the image of `x` into `out`. `scratch` is reused between calls.
    fn apply_into(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.apply_into(x, &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    /// Embeds every point, preserving order and labels. The result is padded like any
    /// other [`DataSet`], which leaves its distances untouched.
    fn apply_batch(&self, data: &DataSet) -> Result<DataSet> {
        if data.d() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: data.d(),
            });
        }
        let k = self.output_dim();
        let mut flat = vec![0.0; data.n() * k];
        flat.par_chunks_mut(k)
            .zip(data.as_flat().par_chunks(data.d()))
            .try_for_each_init(Vec::new, |scratch, (out, x)| self.apply_into(x, scratch, out))?;
        let mut embedded = DataSet::from_flat(&flat, k)?;
        embedded.set_labels(data.labels().map(<[String]>::to_vec));
        Ok(embedded)
    }
}

/// Random `±1` diagonal `D`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignDiagonal {
    signs: Vec<i8>,
}

impl SignDiagonal {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Domain {
                name: "sign",
                value: f64::from(*bad),
                range: "{-1, +1}",
            });
        }
        Ok(SignDiagonal { signs })
    }

    pub fn identity(d: usize) -> Self {
        SignDiagonal { signs: vec![1; d] }
    }

    pub fn sample<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        SignDiagonal {
            signs: (0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `H·D·x` into `out`.
    pub fn hd_into(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if x.len() != self.signs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.signs.len(),
                found: x.len(),
            });
        }
        out.clear();
        out.extend(x.iter().zip(&self.signs).map(|(v, &s)| v * f64::from(s)));
        fwht_inplace(out)
    }

    pub fn hd(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(x.len());
        self.hd_into(x, &mut out)?;
        Ok(out)
    }
}

/// Sparse `k × d` projection in compressed-row form, columns sorted within each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseProjection {
    k: usize,
    d: usize,
    q: f64,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseProjection {
    /// Each entry is nonzero with probability `q`; nonzeros are `N(0, 1/q)`.
    ///
    /// The Bernoulli pattern is drawn by geometric skipping over the `k·d` row-major
    /// positions, so the cost is proportional to the number of nonzeros.
    pub fn sample<R: Rng + ?Sized>(k: usize, d: usize, q: f64, rng: &mut R) -> Result<Self> {
        Self::sample_impl(k, d, q, rng, true)
    }

    /// The Bernoulli pattern alone; every stored value is 1.
    pub fn sample_pattern<R: Rng + ?Sized>(k: usize, d: usize, q: f64, rng: &mut R) -> Result<Self> {
        Self::sample_impl(k, d, q, rng, false)
    }

    fn sample_impl<R: Rng + ?Sized>(
        k: usize,
        d: usize,
        q: f64,
        rng: &mut R,
        with_values: bool,
    ) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(crate::error::domain("q", q, "(0, 1]"));
        }
        let skip = Geometric::new(q).map_err(|_| crate::error::domain("q", q, "(0, 1]"))?;
        let value_scale = (1.0 / q).sqrt();
        let total = (k * d) as u64;
        let mut row_ptr = Vec::with_capacity(k + 1);
        row_ptr.push(0);
        let expected = (total as f64 * q * 1.05) as usize + 16;
        let mut cols = Vec::with_capacity(expected);
        let mut vals = Vec::with_capacity(expected);
        let mut row = 0usize;
        let mut pos = skip.sample(rng);
        while pos < total {
            let r = (pos / d as u64) as usize;
            while row < r {
                row_ptr.push(cols.len());
                row += 1;
            }
            cols.push((pos % d as u64) as u32);
            vals.push(if with_values {
                let z: f64 = StandardNormal.sample(rng);
                z * value_scale
            } else {
                1.0
            });
            pos = pos.saturating_add(1).saturating_add(skip.sample(rng));
        }
        while row < k {
            row_ptr.push(cols.len());
            row += 1;
        }
        Ok(SparseProjection {
            k,
            d,
            q,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Builds a projection from explicit rows of `(column, value)` pairs.
    pub fn from_rows(d: usize, q: f64, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            let mut last: Option<usize> = None;
            for &(c, v) in row {
                if c >= d || last.is_some_and(|l| c <= l) {
                    return Err(Error::Precondition(format!(
                        "column {c} out of order or outside [0, {d})"
                    )));
                }
                last = Some(c);
                cols.push(c as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseProjection {
            k: rows.len(),
            d,
            q,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Identity-like projection `k = d`, `P = I`.
    pub fn identity(d: usize) -> Self {
        SparseProjection {
            k: d,
            d,
            q: 1.0,
            row_ptr: (0..=d).collect(),
            cols: (0..d as u32).collect(),
            vals: vec![1.0; d],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `out[i] = Σ_j P_ij u_j`.
    pub fn multiply_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.d);
        debug_assert_eq!(out.len(), self.k);
        for (i, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, &v)| v * u[c as usize])
                .sum();
        }
    }

    /// `Z_i = Σ_{j ∈ pattern(i)} u_j²` for every row.
    pub fn row_energies(&self, u: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|i| {
                self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|&c| u[c as usize] * u[c as usize])
                    .sum()
            })
            .collect()
    }

    pub(crate) fn check_invariants(&self) -> Result<()> {
        let ok_ptr = self.row_ptr.len() == self.k + 1
            && self.row_ptr.first() == Some(&0)
            && self.row_ptr.last() == Some(&self.cols.len())
            && self.row_ptr.windows(2).all(|w| w[0] <= w[1])
            && self.cols.len() == self.vals.len();
        if !ok_ptr {
            return Err(Error::Precondition("malformed row pointers".into()));
        }
        for i in 0..self.k {
            let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c as usize >= self.d) {
                return Err(Error::Precondition(format!("row {i} has unsorted or out-of-range columns")));
            }
        }
        if self.vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite projection value".into()));
        }
        Ok(())
    }
}

/// The sampled map `Φ = k^{-1/2}·P·H·D`.
///
/// `P` holds `N(0, 1/q)` entries, so `E‖P·H·D·x‖² = k‖x‖²`; the `k^{-1/2}` output
/// scale makes `‖Φx‖ ≈ ‖x‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FjltTransform {
    signs: SignDiagonal,
    projection: SparseProjection,
    params: EmbedParams,
    seed: RngSeed,
}

impl FjltTransform {
    pub fn sample(params: &EmbedParams, seed: RngSeed) -> Result<Self> {
        params.validate()?;
        let mut rng = seed.rng();
        let signs = SignDiagonal::sample(params.d, &mut rng);
        let projection = SparseProjection::sample(params.k, params.d, params.q, &mut rng)?;
        Ok(FjltTransform {
            signs,
            projection,
            params: *params,
            seed,
        })
    }

    /// Assembles a transform from explicit parts; `params.k` and `params.d` must match.
    pub fn from_parts(
        signs: SignDiagonal,
        projection: SparseProjection,
        params: EmbedParams,
        seed: RngSeed,
    ) -> Result<Self> {
        if signs.len() != params.d || projection.d() != params.d {
            return Err(Error::DimensionMismatch {
                expected: params.d,
                found: if signs.len() != params.d {
                    signs.len()
                } else {
                    projection.d()
                },
            });
        }
        if projection.k() != params.k {
            return Err(Error::DimensionMismatch {
                expected: params.k,
                found: projection.k(),
            });
        }
        projection.check_invariants()?;
        Ok(FjltTransform {
            signs,
            projection,
            params,
            seed,
        })
    }

    pub fn signs(&self) -> &SignDiagonal {
        &self.signs
    }

    pub fn projection(&self) -> &SparseProjection {
        &self.projection
    }

    pub fn params(&self) -> &EmbedParams {
        &self.params
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn output_scale(&self) -> f64 {
        1.0 / (self.projection.k() as f64).sqrt()
    }

    /// Replaces `P` keeping `D`; used when resampling only the projection.
    pub fn with_projection(mut self, projection: SparseProjection) -> Result<Self> {
        if projection.d() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                found: projection.d(),
            });
        }
        self.params.k = projection.k();
        self.projection = projection;
        Ok(self)
    }
}

impl LinearEmbedding for FjltTransform {
    fn input_dim(&self) -> usize {
        self.params.d
    }

    fn output_dim(&self) -> usize {
        self.projection.k()
    }

    fn apply_into(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if out.len() != self.projection.k() {
            return Err(Error::DimensionMismatch {
                expected: self.projection.k(),
                found: out.len(),
            });
        }
        self.signs.hd_into(x, scratch)?;
        self.projection.multiply_into(scratch, out);
        let scale = self.output_scale();
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }
}

/// Dense `k × d` matrix of i.i.d. `N(0, 1/k)` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTransform {
    k: usize,
    d: usize,
    seed: RngSeed,
    matrix: Vec<f64>,
}

impl GaussianTransform {
    pub fn sample(params: &EmbedParams, seed: RngSeed) -> Result<Self> {
        params.validate()?;
        Ok(Self::sample_dims(params.k, params.d, seed))
    }

    pub fn sample_dims(k: usize, d: usize, seed: RngSeed) -> Self {
        let mut rng = seed.rng();
        let scale = 1.0 / (k as f64).sqrt();
        let matrix = (0..k * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        GaussianTransform { k, d, seed, matrix }
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

impl LinearEmbedding for GaussianTransform {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.k
    }

    fn apply_into(&self, x: &[f64], _scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        if out.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: out.len(),
            });
        }
        for (o, row) in out.iter_mut().zip(self.matrix.chunks_exact(self.d)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }
}
