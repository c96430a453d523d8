//! Log-barrier interior-point method for the Max-Det problem
//!
//! ```text
//! maximize ln det D   s.t.  D_ii <= e_i,  0 ≺ D ⪯ K
//! ```
//!
//! Each stage minimizes `-ln det D - mu [sum_i ln(e_i - D_ii) + ln det(K - D)]`
//! by damped Newton steps over the `n(n+1)/2` free entries of `D`, then
//! shrinks `mu` by `mu_factor`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use super::kkt::kkt_residuals;
use super::{hadamard_rate, reconstruction_analysis, RdfSolution};
use crate::covariance::{DistortionConstraints, SymmetricMatrix};
use crate::error::Error;
use crate::sdc::sdc_eigen;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Initial barrier weight.
    pub mu0: f64,
    /// Divisor applied to `mu` after each stage.
    pub mu_factor: f64,
    /// Stages run while `mu >= mu_min`.
    pub mu_min: f64,
    /// Stage stops once half the squared Newton decrement drops below this.
    pub newton_tol: f64,
    /// Every KKT residual of the returned solution must be at most this.
    pub kkt_tol: f64,
    /// Newton steps allowed per stage.
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            mu_factor: 10.0,
            mu_min: 1e-9,
            newton_tol: 1e-10,
            kkt_tol: 1e-6,
            max_newton: 100,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error(transparent)]
    Input(#[from] Error),

    #[error("Newton step budget exhausted at mu = {mu:.1e}")]
    MaxIterations { mu: f64, best: Box<RdfSolution> },

    #[error("KKT residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    KktTolerance {
        residual: f64,
        tol: f64,
        best: Box<RdfSolution>,
    },
}

impl SolveError {
    /// Best iterate reached before the failure, if any.
    pub fn best(&self) -> Option<&RdfSolution> {
        match self {
            SolveError::Input(_) => None,
            SolveError::MaxIterations { best, .. } | SolveError::KktTolerance { best, .. } => Some(best),
        }
    }
}

/// Solves the Max-Det program. When `K ⪰ diag(e)` the optimum `diag(e)` is
/// returned without iterating.
pub fn solve_maxdet(
    k: &SymmetricMatrix,
    e: &DistortionConstraints,
    opts: &SolverOptions,
) -> Result<RdfSolution, SolveError> {
    let n = k.n();
    if e.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: e.len(),
        }
        .into());
    }
    if !k.is_positive_definite() {
        return Err(Error::NotPositiveDefinite { what: "covariance" }.into());
    }
    let sdc = sdc_eigen(k, e, None)?;
    if sdc.satisfied {
        return Ok(assemble(k, e, e.matrix(), true, true, 0)?);
    }

    let problem = Barrier::new(k, e);
    let lambda_min = k.min_eigenvalue();
    let e_min = e.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut d = DMatrix::identity(n, n) * (0.5 * e_min.min(lambda_min));
    let mut steps = 0;
    let mut mu = opts.mu0;
    while mu >= opts.mu_min {
        let mut stage_steps = 0;
        loop {
            if stage_steps >= opts.max_newton {
                let best = assemble(k, e, SymmetricMatrix::from_matrix_unchecked(d), false, false, steps)?;
                return Err(SolveError::MaxIterations {
                    mu,
                    best: Box::new(best),
                });
            }
            let Some((grad, hess)) = problem.derivatives(&d, mu) else {
                break;
            };
            let Some(chol) = Cholesky::new(hess) else {
                break;
            };
            let step = -chol.solve(&grad);
            let slope = grad.dot(&step);
            if -0.5 * slope <= opts.newton_tol {
                break;
            }
            let delta = problem.unpack(&step);
            let phi = problem.objective(&d, mu).expect("iterate stays strictly feasible");
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-14 {
                let trial = &d + &delta * t;
                if let Some(phi_t) = problem.objective(&trial, mu) {
                    if phi_t <= phi + 0.25 * t * slope {
                        d = trial;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            stage_steps += 1;
            steps += 1;
            if !accepted {
                // no representable progress left at this mu
                break;
            }
        }
        mu /= opts.mu_factor;
    }

    let solution = assemble(k, e, SymmetricMatrix::from_matrix_unchecked(d), false, false, steps)?;
    let residual = solution.kkt.max_residual();
    if residual > opts.kkt_tol {
        return Err(SolveError::KktTolerance {
            residual,
            tol: opts.kkt_tol,
            best: Box::new(solution),
        });
    }
    Ok(solution)
}

fn assemble(
    k: &SymmetricMatrix,
    e: &DistortionConstraints,
    d_star: SymmetricMatrix,
    sdc_satisfied: bool,
    closed_form: bool,
    newton_steps: usize,
) -> Result<RdfSolution, Error> {
    let hadamard = hadamard_rate(k, e)?;
    let rate_nats = if closed_form {
        hadamard
    } else {
        let log_det_k = k.log_det_pd().ok_or(Error::Singular { what: "covariance" })?;
        let log_det_d = d_star.log_det_pd().ok_or(Error::Singular {
            what: "distortion matrix",
        })?;
        0.5 * (log_det_k - log_det_d)
    };
    let kkt = kkt_residuals(k, e, &d_star)?;
    let recon = reconstruction_analysis(k, e, &d_star, None)?;
    Ok(RdfSolution {
        d_star,
        rate_nats,
        hadamard_rate_nats: hadamard,
        gap_nats: rate_nats - hadamard,
        sdc_satisfied,
        closed_form,
        newton_steps,
        kkt,
        recon,
    })
}

/// Barrier objective over symmetric `D`, parametrized by its upper triangle.
struct Barrier<'a> {
    k: &'a DMatrix<f64>,
    e: &'a [f64],
    index: Vec<(usize, usize)>,
}

fn log_det(m: &DMatrix<f64>) -> Option<(f64, Cholesky<f64, Dyn>)> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let ld = 2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
    ld.is_finite().then_some((ld, chol))
}

impl<'a> Barrier<'a> {
    fn new(k: &'a SymmetricMatrix, e: &'a DistortionConstraints) -> Self {
        let n = k.n();
        let index = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Self {
            k: k.as_matrix(),
            e: e.values(),
            index,
        }
    }

    fn slacks(&self, d: &DMatrix<f64>) -> Option<Vec<f64>> {
        let s: Vec<f64> = self.e.iter().enumerate().map(|(i, ei)| ei - d[(i, i)]).collect();
        s.iter().all(|v| *v > 0.0).then_some(s)
    }

    /// `None` outside the strict interior.
    fn objective(&self, d: &DMatrix<f64>, mu: f64) -> Option<f64> {
        let slack = self.slacks(d)?;
        let (ld_d, _) = log_det(d)?;
        let (ld_s, _) = log_det(&(self.k - d))?;
        Some(-ld_d - mu * (slack.iter().map(|s| s.ln()).sum::<f64>() + ld_s))
    }

    fn derivatives(&self, d: &DMatrix<f64>, mu: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let slack = self.slacks(d)?;
        let (_, chol_d) = log_det(d)?;
        let (_, chol_s) = log_det(&(self.k - d))?;
        let d_inv = chol_d.inverse();
        let s_inv = chol_s.inverse();
        let mut g = &s_inv * mu - &d_inv;
        for (i, s) in slack.iter().enumerate() {
            g[(i, i)] += mu / s;
        }
        let m = self.index.len();
        let grad = DVector::from_fn(m, |p, _| {
            let (a, b) = self.index[p];
            if a == b {
                g[(a, a)]
            } else {
                2.0 * g[(a, b)]
            }
        });
        let pair = |x: &DMatrix<f64>, (a, b): (usize, usize), (c, dd): (usize, usize)| {
            x[(a, c)] * x[(b, dd)] + x[(a, dd)] * x[(b, c)]
        };
        let weight = |(a, b): (usize, usize)| if a == b { 0.5 } else { 1.0 };
        let mut hess = DMatrix::zeros(m, m);
        for p in 0..m {
            for q in p..m {
                let (u, v) = (self.index[p], self.index[q]);
                let mut h = 2.0 * weight(u) * weight(v) * (pair(&d_inv, u, v) + mu * pair(&s_inv, u, v));
                if p == q && u.0 == u.1 {
                    h += mu / (slack[u.0] * slack[u.0]);
                }
                hess[(p, q)] = h;
                hess[(q, p)] = h;
            }
        }
        Some((grad, hess))
    }

    fn unpack(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.k.nrows();
        let mut m = DMatrix::zeros(n, n);
        for (p, &(a, b)) in self.index.iter().enumerate() {
            m[(a, b)] = x[p];
            m[(b, a)] = x[p];
        }
        m
    }
}
