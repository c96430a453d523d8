//! JSON instance files.
//!
//! ```json
//! {"n": 3, "rho0": 0.2, "rho1": 0.3, "e": [0.5, 0.5, 0.3]}
//! {"matrix": [[1, 0.8], [0.8, 1]], "e": [0.5, 0.5]}
//! {"n": 3, "rho0": 0.2, "rho1": 0.3, "raw_variances": [4, 1, 2], "raw_distortions": [1, 0.5, 0.6]}
//! {"matrix": [[4, 1.6], [1.6, 1]], "raw_distortions": [2, 0.5]}
//! ```

use std::path::Path;

use gaussrd::covariance::{normalize_source, NormalizedSource};
use gaussrd::{DistortionConstraints, SymmetricMatrix, TwoTypeCorrelation};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: Option<usize>,
    rho0: Option<f64>,
    rho1: Option<f64>,
    matrix: Option<Vec<Vec<f64>>>,
    e: Option<Vec<f64>>,
    raw_variances: Option<Vec<f64>>,
    raw_distortions: Option<Vec<f64>>,
}

/// A validated problem in normalized (unit-variance) form.
#[derive(Debug, Clone)]
pub struct Instance {
    pub k: SymmetricMatrix,
    pub e: DistortionConstraints,
    pub tc: Option<TwoTypeCorrelation>,
    pub normalized: Option<NormalizedSource>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn load(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|err| input(format!("cannot read {}: {err}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Instance, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|err| input(format!("malformed instance: {err}")))?;
    let two_type = [file.n.is_some(), file.rho0.is_some(), file.rho1.is_some()];
    let tc = match (two_type, &file.matrix) {
        ([true, true, true], None) => {
            Some(TwoTypeCorrelation::new(file.n.unwrap(), file.rho0.unwrap(), file.rho1.unwrap()).map_err(from_core)?)
        }
        ([false, false, false], Some(_)) => None,
        ([false, false, false], None) => return Err(input("instance needs either {n, rho0, rho1} or matrix")),
        (_, Some(_)) => return Err(input("instance has both a 2TC description and a matrix")),
        _ => return Err(input("2TC instance needs all of n, rho0 and rho1")),
    };

    match (&file.e, &file.raw_distortions) {
        (Some(_), Some(_)) => return Err(input("give either e or raw_distortions, not both")),
        (None, None) => return Err(input("instance needs e or raw_distortions")),
        _ => {}
    }
    if file.raw_variances.is_some() && file.raw_distortions.is_none() {
        return Err(input("raw_variances requires raw_distortions"));
    }

    if let Some(raw) = &file.raw_distortions {
        let sigma = match (&tc, &file.matrix, &file.raw_variances) {
            (Some(tc), None, Some(var)) => scale_2tc(tc, var)?,
            (Some(tc), None, None) => tc.matrix(),
            (None, Some(_), Some(_)) => {
                return Err(input(
                    "raw_variances applies to the 2TC form; a matrix carries its own variances",
                ))
            }
            (None, Some(rows), None) => SymmetricMatrix::from_rows(rows).map_err(from_core)?,
            _ => unreachable!("covariance form validated above"),
        };
        let normalized = normalize_source(&sigma, raw).map_err(from_core)?;
        return Ok(Instance {
            k: normalized.k.clone(),
            e: normalized.e.clone(),
            tc,
            normalized: Some(normalized),
        });
    }

    let e = DistortionConstraints::new(file.e.unwrap()).map_err(from_core)?;
    let k = match (&tc, &file.matrix) {
        (Some(tc), _) => tc.matrix(),
        (None, Some(rows)) => SymmetricMatrix::from_rows(rows).map_err(from_core)?,
        _ => unreachable!("covariance form validated above"),
    };
    if e.len() != k.n() {
        return Err(input(format!(
            "e has {} entries but the covariance is {}x{}",
            e.len(),
            k.n(),
            k.n()
        )));
    }
    Ok(Instance {
        k,
        e,
        tc,
        normalized: None,
    })
}

fn scale_2tc(tc: &TwoTypeCorrelation, var: &[f64]) -> Result<SymmetricMatrix, CliError> {
    if var.len() != tc.n() {
        return Err(input(format!(
            "raw_variances has {} entries, expected {}",
            var.len(),
            tc.n()
        )));
    }
    if let Some(v) = var.iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(input(format!("raw variance {v} is not positive")));
    }
    let k = tc.matrix();
    Ok(SymmetricMatrix::from_fn(tc.n(), |i, j| {
        k.get(i, j) * (var[i] * var[j]).sqrt()
    }))
}

pub(crate) fn from_core(err: gaussrd::Error) -> CliError {
    CliError::Input(err.to_string())
}
