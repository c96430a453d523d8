use crate::covariance::{DistortionConstraints, SymmetricMatrix, TwoTypeCorrelation};
use crate::error::{Error, Result};
use crate::sdc::sdc_2tc;

/// `½ ln(det K / ∏ e_i)` in nats. Only a lower bound on the RDF, and the
/// exact RDF when `K ⪰ diag(e)`; returned raw (it may be negative).
pub fn hadamard_rate(k: &SymmetricMatrix, e: &DistortionConstraints) -> Result<f64> {
    if k.n() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: k.n(),
            got: e.len(),
        });
    }
    let log_det = k.log_det_pd().ok_or(Error::Singular { what: "covariance" })?;
    Ok(0.5 * (log_det - e.values().iter().map(|v| v.ln()).sum::<f64>()))
}

fn require_sdc(tc: &TwoTypeCorrelation, e: &DistortionConstraints) -> Result<()> {
    if e.len() != tc.n() {
        return Err(Error::DimensionMismatch {
            expected: tc.n(),
            got: e.len(),
        });
    }
    let report = sdc_2tc(tc, e)?;
    if report.satisfied {
        Ok(())
    } else {
        let condition = report
            .failed_condition
            .map_or_else(|| "K - E not positive semidefinite".to_string(), |c| c.to_string());
        Err(Error::SdcViolated { condition })
    }
}

/// Closed-form RDF of a 2TC source (nats), valid when the SDC holds:
///
/// `sum_{i>=2} ½ ln((1-rho0)/e_i) + ½ ln((1 + (n-1)(rho0 - rho1^2)/(1-rho0)) / e_1)`.
pub fn rdf_2tc_closed(tc: &TwoTypeCorrelation, e: &DistortionConstraints) -> Result<f64> {
    require_sdc(tc, e)?;
    let (rho0, rho1) = (tc.rho0(), tc.rho1());
    let n = tc.n() as f64;
    let v = e.values();
    let peripheral: f64 = v[1..].iter().map(|ei| 0.5 * ((1.0 - rho0) / ei).ln()).sum();
    let central = 0.5 * ((1.0 + (n - 1.0) * (rho0 - rho1 * rho1) / (1.0 - rho0)) / v[0]).ln();
    Ok(peripheral + central)
}

/// Closed-form RDF with isotropic correlation `rho` (nats):
///
/// `sum_i ½ ln((1-rho)/e_i) + ½ ln((1 + (n-1) rho)/(1-rho))`.
pub fn rdf_isotropic(n: usize, rho: f64, e: &DistortionConstraints) -> Result<f64> {
    let tc = TwoTypeCorrelation::isotropic(n, rho)?;
    require_sdc(&tc, e)?;
    let per: f64 = e.values().iter().map(|ei| 0.5 * ((1.0 - rho) / ei).ln()).sum();
    Ok(per + 0.5 * ((1.0 + (n as f64 - 1.0) * rho) / (1.0 - rho)).ln())
}

/// Per-component isotropic rate split into its limit and the finite-`n`
/// correction. All values in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageRate {
    pub exact: f64,
    /// `½ ln((1-rho)/e_g)` with `e_g` the geometric mean constraint.
    pub leading_term: f64,
    /// `exact - leading_term`, of order `ln(n)/n`.
    pub correction: f64,
}

pub fn avg_rate_per_component(n: usize, rho: f64, e: &DistortionConstraints) -> Result<AverageRate> {
    let exact = rdf_isotropic(n, rho, e)? / n as f64;
    let leading_term = 0.5 * ((1.0 - rho) / e.geometric_mean()).ln();
    Ok(AverageRate {
        exact,
        leading_term,
        correction: exact - leading_term,
    })
}
