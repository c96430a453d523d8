//! Probability that the SDC holds when every constraint is drawn
//! independently from `U[0, 1]`, the exponential decay of that probability
//! in `n`, and a sampled backward test channel.
//!
//! Every trial draws from its own ChaCha8 stream (key = seed, stream =
//! trial index) and partial sums are combined in a fixed order, so results
//! are identical for any number of worker threads.

mod channel;
mod estimators;

pub use channel::{channel_tolerance, test_channel_sim, TestChannelSample};
pub use estimators::{sdc_probability_cmc, sdc_probability_mc, two_component_probability};

use std::fmt;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Plain,
    Conditional,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Plain => "plain",
            Method::Conditional => "cmc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub trials: u64,
    pub ci95_half_width: f64,
    pub seed: u64,
    pub method: Method,
}

impl McEstimate {
    /// Standard error, `ci95_half_width / 1.96`.
    pub fn std_error(&self) -> f64 {
        self.ci95_half_width / 1.96
    }
}

/// Least-squares line through `(n, ln p)`. Returns `(slope, intercept)`.
pub fn decay_rate_fit(points: &[(usize, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(invalid("points", format!("need at least 3, got {}", points.len())));
    }
    if let Some((n, p)) = points.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0 && *p <= 1.0)) {
        return Err(invalid("points", format!("p_hat = {p} at n = {n} is not in (0, 1]")));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(n, _)| *n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|(_, p)| p.ln()).collect();
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all n are equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    Ok((slope, y_bar - slope * x_bar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let pts: Vec<(usize, f64)> = (4..=24).map(|n| (n, (n as f64 * 0.7f64.ln()).exp())).collect();
        let (slope, intercept) = decay_rate_fit(&pts).unwrap();
        assert!((slope - 0.7f64.ln()).abs() < 1e-12);
        assert!(intercept.abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_bad_points() {
        assert!(decay_rate_fit(&[(3, 0.5), (4, 0.0), (5, 0.1)]).is_err());
        assert!(decay_rate_fit(&[(3, 0.5), (4, 0.2)]).is_err());
        assert!(decay_rate_fit(&[(3, 0.5), (3, 0.2), (3, 0.1)]).is_err());
    }
}
