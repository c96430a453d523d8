//! The semidefinite condition `K ⪰ diag(e)`, decided either spectrally for a
//! general covariance or through three scalar inequalities for a 2TC
//! covariance.

use std::fmt;

use crate::covariance::{
    build_2tc, default_inertia_tol, inertia, DistortionConstraints, Spectrum, SymmetricMatrix, TwoTypeCorrelation,
};
use crate::error::{Error, Result};

/// Denominators `1 - rho0 - e_i` closer to zero than this are poles.
pub const CHI_POLE_TOL: f64 = 1e-12;

/// The scalar 2TC conditions, checked in the order listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarCondition {
    /// Third-largest-and-below peripherals: `e_3 <= 1 - rho0`.
    E3,
    /// Largest peripheral: `e_2 <= 1 - chi_3 rho0^2 / (1 + chi_3 rho0)`.
    E2,
    /// Central component: `e_1 <= 1 - chi_2 rho1^2 / (1 + chi_2 rho0)`.
    E1,
}

impl fmt::Display for ScalarCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarCondition::E3 => "E3",
            ScalarCondition::E2 => "E2",
            ScalarCondition::E1 => "E1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdcRoute {
    Spectral,
    Scalar,
    /// The scalar route hit a pole and the verdict came from the spectrum.
    ScalarFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdcReport {
    pub satisfied: bool,
    /// `λ_min(K - E)` within tolerance of zero. Implies `satisfied`.
    pub active: bool,
    pub gap_spectrum: Spectrum,
    pub failed_condition: Option<ScalarCondition>,
    pub chi2: Option<f64>,
    pub chi3: Option<f64>,
    pub route: SdcRoute,
}

impl SdcReport {
    pub fn min_gap_eigenvalue(&self) -> f64 {
        self.gap_spectrum.min()
    }

    pub fn satisfied_and_inactive(&self) -> bool {
        self.satisfied && !self.active
    }
}

/// Spectral route: satisfied iff `λ_min(K - E) >= -tol`, active iff
/// `|λ_min| <= tol`. `tol = None` picks `1e-8 * max(1, ||K - E||_inf)`.
pub fn sdc_eigen(k: &SymmetricMatrix, e: &DistortionConstraints, tol: Option<f64>) -> Result<SdcReport> {
    if k.n() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: k.n(),
            got: e.len(),
        });
    }
    let gap = k.sub_diagonal(e.values());
    let tol = tol.unwrap_or_else(|| default_inertia_tol(&gap));
    let spectrum = inertia(&gap, tol);
    let min = spectrum.min();
    let satisfied = min >= -tol;
    Ok(SdcReport {
        satisfied,
        active: satisfied && min.abs() <= tol,
        gap_spectrum: spectrum,
        failed_condition: None,
        chi2: None,
        chi3: None,
        route: SdcRoute::Spectral,
    })
}

/// `sum_{k >= start} 1 / (1 - rho0 - s_k)` over the sorted constraints
/// `s = e.sorted()`. `start = 1` gives χ₂ (all peripherals), `start = 2`
/// gives χ₃ (all but the largest peripheral).
pub fn chi(start: usize, rho0: f64, e: &DistortionConstraints) -> Result<f64> {
    chi_sorted(start, rho0, &e.sorted())
}

pub(crate) fn chi_sorted(start: usize, rho0: f64, sorted: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (position, s) in sorted.iter().enumerate().skip(start) {
        let denom = 1.0 - rho0 - s;
        if denom.abs() < CHI_POLE_TOL {
            return Err(Error::ChiPole { position, value: denom });
        }
        sum += 1.0 / denom;
    }
    Ok(sum)
}

/// Outcome of the three scalar inequalities alone, without a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarVerdict {
    pub failed: Option<ScalarCondition>,
    pub chi2: Option<f64>,
    pub chi3: f64,
}

impl ScalarVerdict {
    pub fn satisfied(&self) -> bool {
        self.failed.is_none()
    }
}

/// Evaluates E3, E2, E1 in order on constraints already sorted (central
/// first, peripherals non-increasing). Needs `n >= 3`. Errors with
/// [`Error::ChiPole`] when a χ sum is singular.
pub fn scalar_conditions(rho0: f64, rho1: f64, sorted: &[f64]) -> Result<ScalarVerdict> {
    assert!(sorted.len() >= 3, "scalar route needs n >= 3");
    let chi3 = chi_sorted(2, rho0, sorted)?;
    if sorted[2] > 1.0 - rho0 {
        return Ok(ScalarVerdict {
            failed: Some(ScalarCondition::E3),
            chi2: None,
            chi3,
        });
    }
    let e2_bound = 1.0 - chi3 * rho0 * rho0 / (1.0 + chi3 * rho0);
    if sorted[1] > e2_bound {
        return Ok(ScalarVerdict {
            failed: Some(ScalarCondition::E2),
            chi2: None,
            chi3,
        });
    }
    let chi2 = chi_sorted(1, rho0, sorted)?;
    let e1_bound = 1.0 - chi2 * rho1 * rho1 / (1.0 + chi2 * rho0);
    let failed = (sorted[0] > e1_bound).then_some(ScalarCondition::E1);
    Ok(ScalarVerdict {
        failed,
        chi2: Some(chi2),
        chi3,
    })
}

/// 2TC route. `n = 2` and pole cases are decided spectrally; the report
/// always carries the spectrum of `K - E` for the `active` flag.
pub fn sdc_2tc(tc: &TwoTypeCorrelation, e: &DistortionConstraints) -> Result<SdcReport> {
    let k = build_2tc(tc);
    let mut report = sdc_eigen(&k, e, None)?;
    if tc.n() < 3 {
        return Ok(report);
    }
    match scalar_conditions(tc.rho0(), tc.rho1(), &e.sorted()) {
        Ok(v) => {
            report.satisfied = v.satisfied();
            report.active = report.satisfied && report.gap_spectrum.min().abs() <= report.gap_spectrum.tol;
            report.failed_condition = v.failed;
            report.chi2 = v.chi2;
            report.chi3 = Some(v.chi3);
            report.route = SdcRoute::Scalar;
        }
        Err(Error::ChiPole { .. }) => report.route = SdcRoute::ScalarFallback,
        Err(other) => return Err(other),
    }
    Ok(report)
}
