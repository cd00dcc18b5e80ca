//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs as a plain binary (`harness = false`) under `cargo test`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use fnnpe::bounds::{khintchine_constant, khintchine_crossover, smoothness_tail_chernoff, smoothness_tail_khintchine};
use fnnpe::fwht::{fwht_inplace, hadamard_matrix};
use fnnpe::io::{bench, BenchConfig, BenchMethod};
use fnnpe::metric::{doubling_constant_exact, doubling_constant_greedy};
use fnnpe::model::smoothness_level;
use fnnpe::synthetic::{gaussian_cloud, noisy_plane};
use fnnpe::verification::{
    mc_distortion, mc_distortion_sweep, mc_gaussian_dominance, mc_nn_preservation, mc_shrinkage, mc_smoothness,
    mc_two_stability, mc_zi_concentration, UnitVectorSource,
};
use fnnpe::{make_dataset, select_params, Constants, SparseProjection, RngSeed};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

/// Dot product with independent partial sums, so the oracle vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8 * 8;
    for (ca, cb) in a[..chunks].chunks_exact(8).zip(b[..chunks].chunks_exact(8)) {
        for l in 0..8 {
            acc[l] += ca[l] * cb[l];
        }
    }
    let tail: f64 = a[chunks..].iter().zip(&b[chunks..]).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

fn criterion_1() -> Outcome {
    let mut rng = RngSeed(101).rng();
    let mut max_err = 0.0f64;
    let mut max_iso = 0.0f64;
    let mut fast_secs = 0.0;
    let start = Instant::now();
    for log in 1..=10 {
        let d = 1usize << log;
        let h = hadamard_matrix(d).unwrap();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut w = v.clone();
            let t = Instant::now();
            fwht_inplace(&mut w).unwrap();
            fast_secs += t.elapsed().as_secs_f64();
            for (i, wi) in w.iter().enumerate() {
                let exact = dot(&h[i * d..(i + 1) * d], &v);
                max_err = max_err.max((wi - exact).abs());
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            max_iso = max_iso.max((nw - nv).abs() / nv);
        }
    }
    let total = start.elapsed().as_secs_f64();
    (
        max_err <= 1e-10 && max_iso <= 1e-9 && total < 1.0,
        format!(
            "d=2..1024 x 1000 vectors: max abs err {max_err:.2e} (<=1e-10), max isometry err {max_iso:.2e} (<=1e-9), \
             total {total:.3}s incl. oracle (fwht alone {fast_secs:.3}s) (<1s)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let (n, d) = (64, 256);
    let data = gaussian_cloud(n, d, RngSeed(201)).unwrap();
    let s = smoothness_level(n, d, 7.0);
    let est = mc_smoothness(&data, s, 7.0, 400, RngSeed(202)).unwrap();
    let bound = est.analytic_bound.as_ref().unwrap().value;
    (
        est.within_bound() == Some(true),
        format!(
            "n=64 d=256 s={s:.4} 400 D samples, exhaustive pairs: p_hat {:.4} <= {bound:.4} + 3*{:.4}",
            est.p_hat, est.std_err
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut worst_gap = f64::NEG_INFINITY;
    for p in 9..=200 {
        let kc = khintchine_constant(p as f64).unwrap();
        worst_gap = worst_gap.max(kc.ln_b - kc.ln_majorant);
    }
    let d = 1024usize;
    let crossover = khintchine_crossover();
    let mut grid_points = 0;
    let mut mismatches = 0;
    let mut kh_tighter = 0;
    // a = s²d over (9, 40]; Khintchine should be the tighter tail exactly up to the crossover.
    for i in 1..=124 {
        let a = 9.0 + 0.25 * i as f64;
        let s = (a / d as f64).sqrt();
        let kh = smoothness_tail_khintchine(s, d).unwrap().raw;
        let ch = smoothness_tail_chernoff(s, d).unwrap().raw;
        grid_points += 1;
        if kh <= ch {
            kh_tighter += 1;
        }
        if (kh <= ch) != (a <= crossover) {
            mismatches += 1;
        }
    }
    (
        worst_gap <= 0.0 && mismatches == 0 && kh_tighter > 0,
        format!(
            "max ln B_p - ln (p/2.5)^(p/2) over p=9..200: {worst_gap:.3} (<=0); Khintchine <= Chernoff on \
             {kh_tighter}/{grid_points} grid points, all with s^2 d <= {crossover:.4}; {mismatches} mismatches"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, eps) in [0.1, 0.2, 0.3].into_iter().enumerate() {
        let base = select_params(64, 256, eps, 0.1, 2.0, Constants::default()).unwrap();
        for (j, k) in [4usize, 8, 16].into_iter().enumerate() {
            let r = mc_shrinkage(&base.with_k(k), 100_000, RngSeed(400 + (3 * i + j) as u64)).unwrap();
            let e = &r.estimate;
            let pass = e.within_bound() == Some(true);
            ok &= pass;
            parts.push(format!(
                "({eps},{k}): {:.2e}<={:.2e}{}",
                e.p_hat,
                e.analytic_bound.as_ref().unwrap().value,
                if pass { "" } else { " FAIL" }
            ));
        }
    }
    (ok, format!("1e5 P-resamplings each, p_hat <= (3eps)^k + 3se: {}", parts.join(", ")))
}

fn criterion_5() -> Outcome {
    let p = select_params(1000, 1024, 0.5, 0.1, 4.0, Constants::default()).unwrap();
    let e = mc_zi_concentration(p.q, 1024, 32, p.s, 2000, UnitVectorSource::Smooth, RngSeed(501)).unwrap();
    (
        e.p_hat <= 0.05 + 3.0 * e.std_err,
        format!("q={:.4} k=32 2000 trials: failure {:.4} <= 0.05 + 3*{:.4}", p.q, e.p_hat, e.std_err),
    )
}

fn criterion_6() -> Outcome {
    let data = gaussian_cloud(64, 512, RngSeed(601)).unwrap();
    let lambda = doubling_constant_greedy(&data, 32, 32).lambda;
    let p = select_params(64, 512, 0.5, 0.1, lambda as f64, Constants::default()).unwrap();
    let r = mc_distortion(&p, &data, 500, RngSeed(602)).unwrap();
    let within = r.worst_pair.p_hat <= p.delta;

    // Failure rates near 1e-7 at k = 64 need far more than 500 resamplings to be nonzero.
    let ks = [8usize, 16, 32, 64];
    let sweep_trials = 50_000;
    let sweep = mc_distortion_sweep(&p, &data, &ks, sweep_trials, RngSeed(603)).unwrap();
    let rates: Vec<f64> = sweep.iter().map(|s| s.pooled.p_hat).collect();
    let monotone = rates.windows(2).all(|w| w[1] < w[0]) && rates.iter().all(|&r| r > 0.0);
    // Least-squares slope of ln p_hat against kε².
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64 * 0.25).collect();
    let ys: Vec<f64> = rates.iter().map(|r| r.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    (
        within && monotone && slope < 0.0,
        format!(
            "lambda={lambda} k={} 500 P-resamplings: worst pair {:.4} <= delta 0.1 (pooled {:.2e}); \
             {sweep_trials} resamplings, pooled p_hat at k=8,16,32,64: {:.2e} {:.2e} {:.2e} {:.2e}, slope of ln p_hat vs k eps^2 {slope:.3} (R^2 {r2:.3})",
            p.k, r.worst_pair.p_hat, r.pooled.p_hat, rates[0], rates[1], rates[2], rates[3]
        ),
    )
}

fn criterion_7() -> Outcome {
    let data = noisy_plane(500, 512, 0.01, RngSeed(701)).unwrap();
    let lambda = doubling_constant_greedy(&data, 32, 32).lambda;
    let p = select_params(500, 512, 0.5, 0.1, lambda as f64, Constants::default()).unwrap();
    let r = mc_nn_preservation(&data, &p, 50, RngSeed(702)).unwrap();
    (
        r.meets_target() && 4 * p.k < p.d,
        format!(
            "greedy lambda={lambda} k={} (< d/4 = {}) 50 transforms: joint pass {:.4} + 3*{:.4} >= 0.9 \
             (P1 fail {:.4}, P2 fail {:.4}, worst transform {:.4})",
            p.k,
            p.d / 4,
            r.joint_pass.p_hat,
            r.joint_pass.std_err,
            r.property1_failure.p_hat,
            r.property2_failure.p_hat,
            r.min_joint_rate
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = select_params(1000, 1024, 0.5, 0.1, 4.0, Constants::default()).unwrap().with_k(32);
    let samples = 200;
    let mut rng = RngSeed(801).rng();
    let total: usize = (0..samples)
        .map(|_| SparseProjection::sample(p.k, p.d, p.q, &mut rng).unwrap().nnz())
        .sum();
    let mean = total as f64 / samples as f64;
    let expected = p.expected_nnz();
    let sd_of_mean = (expected * (1.0 - p.q) / samples as f64).sqrt();
    let z = (mean - expected) / sd_of_mean;
    (
        z.abs() <= 4.0,
        format!(
            "k=32 d=1024 q={:.4}: mean nnz {mean:.2} vs kdq {expected:.2}, {z:.2} SDs of the mean (|z|<=4)",
            p.q
        ),
    )
}

fn criterion_9() -> Outcome {
    let rows = bench(&BenchConfig {
        grid: vec![(4096, 1 << 14)],
        repeats: 5,
        ..BenchConfig::default()
    })
    .unwrap();
    let fjlt = rows.iter().find(|r| r.method == BenchMethod::Fjlt).unwrap();
    let dense = rows.iter().find(|r| r.method == BenchMethod::Gaussian).unwrap();
    (
        fjlt.k == dense.k && fjlt.median_seconds <= dense.median_seconds / 1.5,
        format!(
            "d=16384 n=4096 k={} single-threaded, median of 5: fjlt {:.3}s vs dense {:.3}s (ratio {:.2}, need >=1.5); \
             fjlt nnz {:.0} vs kdq {:.0}",
            fjlt.k,
            fjlt.median_seconds,
            dense.median_seconds,
            dense.median_seconds / fjlt.median_seconds,
            fjlt.nnz,
            fjlt.expected_nnz
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = RngSeed(1001).rng();
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for c in 0..10 {
        let m = 1 + c % 5;
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..2.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(0.0..1.5)).collect();
        let t = x.iter().sum::<f64>() * rng.random_range(0.5..1.5);
        let r = mc_gaussian_dominance(&x, &y, t, 50_000, RngSeed(1100 + c)).unwrap();
        ok &= r.dominance_holds;
        worst = worst.max((r.y.p_hat - r.x.p_hat) / r.combined_std_err);
    }
    let s1 = mc_two_stability(&[3.0, 4.0], 1.0, 20_000, RngSeed(1201)).unwrap();
    let s2 = mc_two_stability(&[1.0, -2.0, 0.5, 2.0, 0.25], 0.7, 20_000, RngSeed(1202)).unwrap();
    ok &= s1.passes() && s2.passes();
    (
        ok,
        format!(
            "10 dominance configs, max (p_Y - p_X)/se {worst:.2} (<=3); 2-stability variance off by {:.2} and {:.2} se \
             (<=5), KS gap {:.4}/{:.4} and {:.4}/{:.4}",
            (s1.sample_variance - s1.expected_variance).abs() / s1.variance_std_err,
            (s2.sample_variance - s2.expected_variance).abs() / s2.variance_std_err,
            s1.ks_gap,
            s1.ks_threshold,
            s2.ks_gap,
            s2.ks_threshold
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = RngSeed(1101).rng();
    let mut violations = 0;
    let mut max_exact = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=16);
        let dim = rng.random_range(1..=4);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ds = make_dataset(&pts).unwrap();
        let exact = doubling_constant_exact(&ds).unwrap().lambda;
        let greedy = doubling_constant_greedy(&ds, 32, 32).lambda;
        max_exact = max_exact.max(exact);
        if greedy < exact {
            violations += 1;
        }
    }
    let two = doubling_constant_exact(&make_dataset(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap())
        .unwrap()
        .lambda;
    (
        violations == 0 && two == 2,
        format!("100 instances n<=16: {violations} with greedy < exact (max exact {max_exact}); two-point lambda {two} (==2)"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("fwht correctness", criterion_1),
        ("smoothness probability", criterion_2),
        ("khintchine machinery", criterion_3),
        ("shrinkage", criterion_4),
        ("Z_i concentration", criterion_5),
        ("distortion", criterion_6),
        ("nearest-neighbor preservation", criterion_7),
        ("sparsity accounting", criterion_8),
        ("speed", criterion_9),
        ("gaussian dominance and 2-stability", criterion_10),
        ("doubling constant", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
