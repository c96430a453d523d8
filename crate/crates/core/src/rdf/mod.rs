//! Rate-distortion function under individual distortion constraints.
//!
//! The RDF is `½ ln det(D*⁻¹ K)` where `D*` maximizes `det D` subject to
//! `diag(D) <= e` and `0 ≺ D ⪯ K`. When `K ⪰ diag(e)` the optimum is
//! `D* = diag(e)` and the rate equals the Hadamard lower rate
//! `½ ln(det K / ∏ e_i)`; otherwise `D*` comes from [`solve_maxdet`] and the
//! optimal reconstruction covariance `K - D*` is singular.
//!
//! All rates are in nats; see [`nats_to_bits`].

mod closed;
mod kkt;
mod oracle;
mod solver;

pub use closed::{avg_rate_per_component, hadamard_rate, rdf_2tc_closed, rdf_isotropic, AverageRate};
pub use kkt::{kkt_residuals, KktReport};
pub use oracle::brute_force_rdf;
pub use solver::{solve_maxdet, SolveError, SolverOptions};

use crate::covariance::{default_inertia_tol, inertia, DistortionConstraints, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::sdc::sdc_eigen;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

/// Relative rank cutoff for `K - D*`: eigenvalues at or below
/// `1e-7 * λ_max(K)` count as zero.
pub const RECON_RANK_RTOL: f64 = 1e-7;

/// `|e_i - d*_i|` at or below this marks constraint `i` as active.
pub const ACTIVE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct RdfSolution {
    pub d_star: SymmetricMatrix,
    pub rate_nats: f64,
    pub hadamard_rate_nats: f64,
    /// `rate - hadamard rate`, non-negative up to solver accuracy.
    pub gap_nats: f64,
    pub sdc_satisfied: bool,
    /// `true` when the SDC held and `D* = diag(e)` was returned directly.
    pub closed_form: bool,
    pub newton_steps: usize,
    pub kkt: KktReport,
    pub recon: ReconReport,
}

impl RdfSolution {
    pub fn rate_bits(&self) -> f64 {
        nats_to_bits(self.rate_nats)
    }
}

/// Structure of the optimal reconstruction `x̂* ~ N(0, K - D*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconReport {
    pub recon_cov: SymmetricMatrix,
    pub recon_rank: usize,
    pub rank_tol: f64,
    pub det_gap: f64,
    /// `K - D*` is nonsingular at `rank_tol` (full reconstruction rank).
    pub det_gap_positive: bool,
    /// Number of active distortion constraints, `N - r(e - d*)`.
    pub bound_active: usize,
    /// `n₊(K - E)`.
    pub bound_inertia: usize,
    pub sdc_satisfied_inactive: bool,
    /// `recon_rank <= min(bound_active, bound_inertia)`.
    pub rank_bound_holds: bool,
    /// `det(K - D*) > 0` exactly when the SDC holds and is inactive.
    pub det_dichotomy_holds: bool,
}

/// Rank and determinant diagnostics of `K - D*`. `rank_tol = None` uses
/// `1e-7 * λ_max(K)`.
pub fn reconstruction_analysis(
    k: &SymmetricMatrix,
    e: &DistortionConstraints,
    d_star: &SymmetricMatrix,
    rank_tol: Option<f64>,
) -> Result<ReconReport> {
    let n = k.n();
    if d_star.n() != n || e.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if d_star.n() != n { d_star.n() } else { e.len() },
        });
    }
    let recon_cov = k.sub(d_star);
    let rank_tol = rank_tol.unwrap_or_else(|| RECON_RANK_RTOL * k.eigenvalues()[0].abs());
    let recon_rank = recon_cov.eigenvalues().iter().filter(|&&v| v > rank_tol).count();
    let det_gap = recon_cov.determinant();
    let d = d_star.diagonal();
    let bound_active = e
        .values()
        .iter()
        .zip(&d)
        .filter(|(ei, di)| (*ei - *di).abs() <= ACTIVE_TOL)
        .count();
    let gap = k.sub_diagonal(e.values());
    let bound_inertia = inertia(&gap, default_inertia_tol(&gap)).inertia.positive;
    let sdc = sdc_eigen(k, e, None)?;
    let det_gap_positive = recon_rank == n;
    let sdc_satisfied_inactive = sdc.satisfied_and_inactive();
    Ok(ReconReport {
        recon_cov,
        recon_rank,
        rank_tol,
        det_gap,
        det_gap_positive,
        bound_active,
        bound_inertia,
        sdc_satisfied_inactive,
        rank_bound_holds: recon_rank <= bound_active.min(bound_inertia),
        det_dichotomy_holds: det_gap_positive == sdc_satisfied_inactive,
    })
}
