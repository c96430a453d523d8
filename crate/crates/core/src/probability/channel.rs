use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::covariance::{default_inertia_tol, SymmetricMatrix};
use crate::error::{invalid, Error, Result};

const BLOCK: u64 = 4096;
/// Pivots at or below `1e-10 * λ_max` end the factorization.
const RANK_RTOL: f64 = 1e-10;

/// Empirical second moments from a simulated backward test channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TestChannelSample {
    /// Mean of `(x - x̂)(x - x̂)ᵀ`.
    pub distortion: SymmetricMatrix,
    /// Mean of `x xᵀ`.
    pub source_covariance: SymmetricMatrix,
}

/// Largest deviation of an empirical second moment of `samples` Gaussian
/// draws allowed around a variance `d`: `4 sqrt(2 / samples) d`.
pub fn channel_tolerance(d: f64, samples: u64) -> f64 {
    4.0 * (2.0 / samples as f64).sqrt() * d
}

/// Factor `L` with `L Lᵀ = A` for `A ⪰ 0`, by Cholesky with diagonal
/// pivoting; columns stop once the largest remaining pivot is at or below
/// `RANK_RTOL * λ_max(A)`. Returns an `n × rank` matrix.
fn pivoted_cholesky(a: &SymmetricMatrix) -> DMatrix<f64> {
    let n = a.n();
    let cutoff = RANK_RTOL * a.eigenvalues()[0].max(0.0);
    let mut residual = a.as_matrix().clone();
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut used = vec![false; n];
    for _ in 0..n {
        let pivot = (0..n)
            .filter(|&i| !used[i])
            .max_by(|&i, &j| residual[(i, i)].total_cmp(&residual[(j, j)]));
        let Some(p) = pivot else { break };
        let d = residual[(p, p)];
        if d <= cutoff {
            break;
        }
        used[p] = true;
        let col = residual.column(p) / d.sqrt();
        for i in 0..n {
            for j in 0..n {
                residual[(i, j)] -= col[i] * col[j];
            }
        }
        columns.push(col);
    }
    if columns.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&columns)
    }
}

/// Draws `x̂ ~ N(0, K - D*)` and `z ~ N(0, D*)` independently, forms
/// `x = x̂ + z`, and returns the empirical distortion and source moments.
pub fn test_channel_sim(
    k: &SymmetricMatrix,
    d_star: &SymmetricMatrix,
    samples: u64,
    seed: u64,
) -> Result<TestChannelSample> {
    let n = k.n();
    if d_star.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d_star.n(),
        });
    }
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    if d_star.min_eigenvalue() <= default_inertia_tol(d_star) {
        return Err(Error::NotPositiveDefinite {
            what: "distortion matrix",
        });
    }
    let recon = k.sub(d_star);
    let min = recon.min_eigenvalue();
    if min < -default_inertia_tol(&recon) {
        return Err(Error::Indefinite {
            what: "K - D*",
            min_eigenvalue: min,
        });
    }
    let a = pivoted_cholesky(&recon);
    let b = pivoted_cholesky(d_star);
    let base = ChaCha8Rng::seed_from_u64(seed);
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut dist = DMatrix::zeros(n, n);
            let mut src = DMatrix::zeros(n, n);
            for s in (blk * BLOCK)..((blk + 1) * BLOCK).min(samples) {
                let mut rng = base.clone();
                rng.set_stream(s);
                let g1 = DVector::from_fn(a.ncols(), |_, _| StandardNormal.sample(&mut rng));
                let g2 = DVector::from_fn(b.ncols(), |_, _| StandardNormal.sample(&mut rng));
                let x_hat = &a * g1;
                let x = &x_hat + &b * g2;
                let err = &x - &x_hat;
                dist.ger(1.0, &err, &err, 1.0);
                src.ger(1.0, &x, &x, 1.0);
            }
            (dist, src)
        })
        .collect();
    let mut dist = DMatrix::zeros(n, n);
    let mut src = DMatrix::zeros(n, n);
    for (d, s) in &partial {
        dist += d;
        src += s;
    }
    let scale = 1.0 / samples as f64;
    Ok(TestChannelSample {
        distortion: SymmetricMatrix::from_matrix_unchecked((&dist + dist.transpose()) * (0.5 * scale)),
        source_covariance: SymmetricMatrix::from_matrix_unchecked((&src + src.transpose()) * (0.5 * scale)),
    })
}
