//! Multiplier recovery and residuals for the Max-Det optimality conditions
//!
//! ```text
//! D⁻¹ = P + Q,   P (K - D) = 0,   Q (e - d) = 0,   P ⪰ 0,  Q = diag(q) ⪰ 0.
//! ```
//!
//! Only `D` is given, so `(P, q)` is recovered as the least-squares solution
//! of stationarity and both slackness equations jointly, then projected onto
//! `P ⪰ 0`, `q >= 0`. Nothing is decided about which constraints are active,
//! so a binding constraint with a tiny multiplier is not forced to `q_i = 0`.
//! A diagonal `D` is certified directly with `P = 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::ACTIVE_TOL;
use crate::covariance::{DistortionConstraints, SymmetricMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub p_mult: SymmetricMatrix,
    pub q_mult: Vec<f64>,
    /// `||D⁻¹ - P - Q||_F`
    pub stationarity_residual: f64,
    /// `||P (K - D)||_F`
    pub slack1_residual: f64,
    /// `max_i |q_i (e_i - d_i)|`
    pub slack2_residual: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_residual
            .max(self.slack1_residual)
            .max(self.slack2_residual)
    }
}

pub fn kkt_residuals(k: &SymmetricMatrix, e: &DistortionConstraints, d: &SymmetricMatrix) -> Result<KktReport> {
    let n = k.n();
    if d.n() != n || e.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if d.n() != n { d.n() } else { e.len() },
        });
    }
    let d_inv = d.as_matrix().clone().try_inverse().ok_or(Error::Singular {
        what: "distortion matrix",
    })?;
    let slack = k.sub(d);
    let diag = d.diagonal();
    let active: Vec<usize> = (0..n).filter(|&i| e.values()[i] - diag[i] <= ACTIVE_TOL).collect();

    let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || d.get(i, j) == 0.0));
    let (p, q) = if is_diagonal {
        let q = (0..n)
            .map(|i| if active.contains(&i) { d_inv[(i, i)] } else { 0.0 })
            .collect();
        (DMatrix::zeros(n, n), q)
    } else {
        let gaps: Vec<f64> = e.values().iter().zip(&diag).map(|(ei, di)| ei - di).collect();
        least_squares_multipliers(&d_inv, slack.as_matrix(), &gaps)
    };

    let mut stationarity = &d_inv - &p;
    for (i, qi) in q.iter().enumerate() {
        stationarity[(i, i)] -= qi;
    }
    let slack1 = &p * slack.as_matrix();
    let slack2 = q
        .iter()
        .zip(e.values().iter().zip(&diag))
        .map(|(qi, (ei, di))| (qi * (ei - di)).abs())
        .fold(0.0, f64::max);
    Ok(KktReport {
        p_mult: SymmetricMatrix::from_matrix_unchecked(p),
        q_mult: q,
        stationarity_residual: stationarity.norm(),
        slack1_residual: slack1.norm(),
        slack2_residual: slack2,
    })
}

fn least_squares_multipliers(d_inv: &DMatrix<f64>, slack: &DMatrix<f64>, gaps: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let n = d_inv.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let unknown_of = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        // position of (a, b) in the row-major upper triangle
        a * n - a * (a + 1) / 2 + b
    };
    let m = pairs.len();
    let cols = m + n;
    let rows = m + n * n + n;
    let mut a = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);

    // stationarity, weighted so the row norm matches the Frobenius norm
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let w = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
        a[(r, r)] = w;
        if i == j {
            a[(r, m + i)] = w;
        }
        rhs[r] = w * d_inv[(i, j)];
    }
    // (P S)_ij = sum_l P_il S_lj = 0
    for i in 0..n {
        for j in 0..n {
            let r = m + i * n + j;
            for l in 0..n {
                a[(r, unknown_of(i, l))] += slack[(l, j)];
            }
        }
    }
    // q_i (e_i - d_i) = 0
    for (i, g) in gaps.iter().enumerate() {
        a[(m + n * n + i, m + i)] = *g;
    }

    let solution = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("SVD computed with both factors");
    let mut p = DMatrix::zeros(n, n);
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        p[(i, j)] = solution[idx];
        p[(j, i)] = solution[idx];
    }
    let eig = SymmetricEigen::new(p);
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let p = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();

    let q = (0..n).map(|i| solution[m + i].max(0.0)).collect();
    (p, q)
}
