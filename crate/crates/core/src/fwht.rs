//! Normalized fast Walsh-Hadamard transform.
//!
//! The transform is scaled by `d^{-1/2}` so that it is an isometry and its own
//! inverse.

use crate::error::{Error, Result};

/// A validated power-of-two dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HadamardDim(usize);

impl HadamardDim {
    pub fn new(d: usize) -> Result<Self> {
        if d.is_power_of_two() {
            Ok(HadamardDim(d))
        } else {
            Err(Error::NonPowerOfTwo(d))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn log2(self) -> u32 {
        self.0.trailing_zeros()
    }
}

/// Replaces `v` with `Hv` using `log₂ d` butterfly passes.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let d = HadamardDim::new(v.len())?.get();
    let mut h = 1;
    while h < d {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    if d > 1 {
        let scale = 1.0 / (d as f64).sqrt();
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(())
}

/// Entry `(i, j)` of the unnormalized Sylvester Hadamard matrix: `(-1)^{popcount(i & j)}`.
fn sylvester_sign(i: usize, j: usize) -> f64 {
    if (i & j).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Explicit normalized Sylvester matrix, row-major `d × d`.
pub fn hadamard_matrix(d: usize) -> Result<Vec<f64>> {
    let d = HadamardDim::new(d)?.get();
    let scale = 1.0 / (d as f64).sqrt();
    let mut m = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            m.push(sylvester_sign(i, j) * scale);
        }
    }
    Ok(m)
}

/// Quadratic-time reference product with the explicit Sylvester matrix.
pub fn naive_hadamard(v: &[f64]) -> Result<Vec<f64>> {
    let d = v.len();
    let m = hadamard_matrix(d)?;
    Ok(m.chunks_exact(d)
        .map(|row| row.iter().zip(v).map(|(h, x)| h * x).sum())
        .collect())
}
