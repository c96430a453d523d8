use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{McEstimate, Method};
use crate::covariance::TwoTypeCorrelation;
use crate::error::{invalid, Result};

const BLOCK: u64 = 4096;
/// Diagonal shift for the Cholesky membership test of `K - E`.
const PSD_SHIFT: f64 = 1e-12;

fn trial_rng(base: &ChaCha8Rng, trial: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng
}

/// Runs `f` on every trial index, summing `(y, y^2)` within fixed blocks
/// and then across blocks in index order.
fn block_sums(trials: u64, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> f64 + Sync) -> (f64, f64) {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let blocks = trials.div_ceil(BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = (0.0, 0.0);
            for t in (b * BLOCK)..((b + 1) * BLOCK).min(trials) {
                let y = f(&mut trial_rng(&base, t));
                acc.0 += y;
                acc.1 += y * y;
            }
            acc
        })
        .collect();
    partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    Ok(())
}

/// Plain Monte Carlo: `e_i ~ U[0, 1)` i.i.d. and a spectral (Cholesky)
/// test of `K - E ⪰ 0`.
pub fn sdc_probability_mc(n: usize, rho0: f64, rho1: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    let k = TwoTypeCorrelation::new(n, rho0, rho1)?.matrix().into_matrix();
    let (hits, _) = block_sums(trials, seed, |rng| {
        let mut gap: DMatrix<f64> = k.clone();
        for i in 0..n {
            gap[(i, i)] += PSD_SHIFT - rng.random::<f64>();
        }
        if Cholesky::new(gap).is_some() {
            1.0
        } else {
            0.0
        }
    });
    let p_hat = hits / trials as f64;
    Ok(McEstimate {
        p_hat,
        trials,
        ci95_half_width: 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        seed,
        method: Method::Plain,
    })
}

/// Conditional Monte Carlo for `n >= 3`. Each trial draws the `n - 1`
/// peripheral constraints and keeps all but the largest; the largest
/// peripheral (uniform on `[m, 1]` given the rest, `m` their maximum) and
/// the central constraint are integrated out exactly.
pub fn sdc_probability_cmc(n: usize, rho0: f64, rho1: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    if n < 3 {
        return Err(invalid("n", format!("conditional estimator needs n >= 3, got {n}")));
    }
    TwoTypeCorrelation::new(n, rho0, rho1)?;
    let (sum, sum_sq) = block_sums(trials, seed, |rng| {
        let mut v: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        conditional_value(rho0, rho1, &v[1..])
    });
    let t = trials as f64;
    let p_hat = sum / t;
    let var = if trials > 1 {
        ((sum_sq - t * p_hat * p_hat) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        p_hat,
        trials,
        ci95_half_width: 1.96 * (var / t).sqrt(),
        seed,
        method: Method::Conditional,
    })
}

/// `P(SDC | e_3..e_n)` with `rest` the peripherals below the largest,
/// sorted non-increasing.
fn conditional_value(rho0: f64, rho1: f64, rest: &[f64]) -> f64 {
    let m = rest[0];
    if m >= 1.0 - rho0 {
        return 0.0;
    }
    let chi3: f64 = rest.iter().map(|e| 1.0 / (1.0 - rho0 - e)).sum();
    let beta = 1.0 + rho0 * chi3;
    let u2 = 1.0 - chi3 * rho0 * rho0 / beta;
    if rho1 == 0.0 {
        return ((u2.min(1.0) - m) / (1.0 - m)).clamp(0.0, 1.0);
    }
    // q(e2) > 0 on [m, u2) and vanishes at u2
    let q = |e2: f64| rho0 + beta * (1.0 - rho0 - e2);
    let r2 = rho1 * rho1;
    // central slack 1 - e1 bound: L(e2) = 1 - rho1^2 (1 + c chi3) / q, c = 1 - rho0 - e2
    let central = |e2: f64| 1.0 - r2 * (1.0 + (1.0 - rho0 - e2) * chi3) / q(e2);
    if m >= u2 || central(m) <= 0.0 {
        return 0.0;
    }
    let a = r2 - rho0;
    let mut zero = 1.0 - rho0 - a / (1.0 - a * chi3);
    if !(zero > m && zero < u2 && zero.is_finite()) {
        let (mut lo, mut hi) = (m, u2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if central(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        zero = lo;
    }
    let top = zero.min(1.0);
    // ∫ L de2 = (x1 - x0)(1 - rho1^2 chi3 / beta) - rho1^2 / beta^2 ln(q(x0) / q(x1))
    let integral = (top - m) * (1.0 - r2 * chi3 / beta) - r2 / (beta * beta) * (q(m) / q(top)).ln();
    (integral / (1.0 - m)).clamp(0.0, 1.0)
}

/// Exact SDC probability for `n = 2` with correlation `rho`:
/// `P((1 - e_1)(1 - e_2) >= rho^2) = 1 - rho^2 (1 - ln rho^2)`.
pub fn two_component_probability(rho: f64) -> f64 {
    let r2 = rho * rho;
    if r2 == 0.0 {
        1.0
    } else {
        1.0 - r2 * (1.0 - r2.ln())
    }
}
