//! Seeded synthetic point sets.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::{DataSet, RngSeed};

/// `n` i.i.d. standard Gaussian points in `R^dim`.
pub fn gaussian_cloud(n: usize, dim: usize, seed: RngSeed) -> Result<DataSet> {
    let mut rng = seed.rng();
    let flat: Vec<f64> = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    DataSet::from_flat(&flat, dim)
}

/// `n` points on a random 2-D affine plane in `R^dim`, plus isotropic noise.
///
/// Plane coordinates are uniform in `[-1, 1]²` along a random orthonormal pair of
/// directions, offset by a random unit-scale translation. Each coordinate then gets
/// `N(0, (noise/√dim)²)`, so `noise` is the expected noise norm relative to the
/// unit extent of the plane.
pub fn noisy_plane(n: usize, dim: usize, noise: f64, seed: RngSeed) -> Result<DataSet> {
    let mut rng = seed.rng();
    let gaussian = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| StandardNormal.sample(rng)).collect()
    };
    let mut e1 = gaussian(&mut rng);
    let mut e2 = gaussian(&mut rng);
    normalize(&mut e1);
    let proj: f64 = e1.iter().zip(&e2).map(|(a, b)| a * b).sum();
    e2.iter_mut().zip(&e1).for_each(|(b, a)| *b -= proj * a);
    normalize(&mut e2);
    let mut offset = gaussian(&mut rng);
    normalize(&mut offset);

    let sigma = noise / (dim as f64).sqrt();
    let mut flat = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        for c in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            flat.push(offset[c] + a * e1[c] + b * e2[c] + sigma * z);
        }
    }
    DataSet::from_flat(&flat, dim)
}

fn normalize(v: &mut [f64]) {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= len);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_without_noise_has_rank_two_differences() {
        let ds = noisy_plane(20, 64, 0.0, RngSeed(1)).unwrap();
        // Any difference vector is a combination of the first two differences.
        let base: Vec<Vec<f64>> = (1..3)
            .map(|i| ds.point(i).iter().zip(ds.point(0)).map(|(a, b)| a - b).collect())
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let g = [
            [dot(&base[0], &base[0]), dot(&base[0], &base[1])],
            [dot(&base[1], &base[0]), dot(&base[1], &base[1])],
        ];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        for i in 3..20 {
            let v: Vec<f64> = ds.point(i).iter().zip(ds.point(0)).map(|(a, b)| a - b).collect();
            let r = [dot(&base[0], &v), dot(&base[1], &v)];
            let c0 = (r[0] * g[1][1] - r[1] * g[0][1]) / det;
            let c1 = (g[0][0] * r[1] - g[1][0] * r[0]) / det;
            let resid: f64 = v
                .iter()
                .enumerate()
                .map(|(j, x)| (x - c0 * base[0][j] - c1 * base[1][j]).powi(2))
                .sum();
            assert!(resid < 1e-18, "residual {resid}");
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(
            noisy_plane(10, 16, 0.01, RngSeed(3)).unwrap(),
            noisy_plane(10, 16, 0.01, RngSeed(3)).unwrap()
        );
        assert_eq!(gaussian_cloud(5, 7, RngSeed(3)).unwrap().d(), 8);
    }
}
