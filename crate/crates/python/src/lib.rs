//! Python bindings. Matrices cross the boundary as lists of rows, rates are
//! in nats unless the name says otherwise.

use gaussrd::probability::{self, McEstimate};
use gaussrd::rdf::{self, SolveError, SolverOptions};
use gaussrd::{region, sdc, DistortionConstraints, SymmetricMatrix};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type Rows = Vec<Vec<f64>>;

fn value_err(err: gaussrd::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SymmetricMatrix> {
    SymmetricMatrix::from_rows(&rows).map_err(value_err)
}

fn constraints(e: Vec<f64>) -> PyResult<DistortionConstraints> {
    DistortionConstraints::new(e).map_err(value_err)
}

#[pyclass(get_all, frozen)]
pub struct TwoTypeCorrelation {
    n: usize,
    rho0: f64,
    rho1: f64,
}

impl TwoTypeCorrelation {
    fn inner(&self) -> gaussrd::TwoTypeCorrelation {
        gaussrd::TwoTypeCorrelation::new(self.n, self.rho0, self.rho1).expect("validated at construction")
    }
}

#[pymethods]
impl TwoTypeCorrelation {
    #[new]
    fn new(n: usize, rho0: f64, rho1: f64) -> PyResult<Self> {
        gaussrd::TwoTypeCorrelation::new(n, rho0, rho1).map_err(value_err)?;
        Ok(Self { n, rho0, rho1 })
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner().matrix().to_rows()
    }

    fn determinant(&self) -> f64 {
        self.inner().determinant()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        gaussrd::covariance::tc2_spectrum(&self.inner()).eigenvalues
    }

    fn __repr__(&self) -> String {
        format!(
            "TwoTypeCorrelation(n={}, rho0={}, rho1={})",
            self.n, self.rho0, self.rho1
        )
    }
}

#[pyclass(get_all, frozen)]
pub struct SdcResult {
    satisfied: bool,
    active: bool,
    min_eigenvalue: f64,
    failed_condition: Option<String>,
    chi2: Option<f64>,
    chi3: Option<f64>,
}

#[pymethods]
impl SdcResult {
    fn __repr__(&self) -> String {
        format!(
            "SdcResult(satisfied={}, active={}, min_eigenvalue={:.6e})",
            self.satisfied, self.active, self.min_eigenvalue
        )
    }
}

impl From<sdc::SdcReport> for SdcResult {
    fn from(r: sdc::SdcReport) -> Self {
        Self {
            satisfied: r.satisfied,
            active: r.active,
            min_eigenvalue: r.min_gap_eigenvalue(),
            failed_condition: r.failed_condition.map(|c| c.to_string()),
            chi2: r.chi2,
            chi3: r.chi3,
        }
    }
}

#[pyfunction]
#[pyo3(signature = (k, e, tol=None))]
fn sdc_eigen(k: Vec<Vec<f64>>, e: Vec<f64>, tol: Option<f64>) -> PyResult<SdcResult> {
    Ok(sdc::sdc_eigen(&matrix(k)?, &constraints(e)?, tol)
        .map_err(value_err)?
        .into())
}

#[pyfunction]
fn sdc_2tc(tc: &TwoTypeCorrelation, e: Vec<f64>) -> PyResult<SdcResult> {
    Ok(sdc::sdc_2tc(&tc.inner(), &constraints(e)?).map_err(value_err)?.into())
}

#[pyfunction]
fn hadamard_rate(k: Vec<Vec<f64>>, e: Vec<f64>) -> PyResult<f64> {
    rdf::hadamard_rate(&matrix(k)?, &constraints(e)?).map_err(value_err)
}

#[pyfunction]
fn rdf_2tc_closed(tc: &TwoTypeCorrelation, e: Vec<f64>) -> PyResult<f64> {
    rdf::rdf_2tc_closed(&tc.inner(), &constraints(e)?).map_err(value_err)
}

#[pyfunction]
fn rdf_isotropic(n: usize, rho: f64, e: Vec<f64>) -> PyResult<f64> {
    rdf::rdf_isotropic(n, rho, &constraints(e)?).map_err(value_err)
}

#[pyfunction]
fn brute_force_rdf(k: Vec<Vec<f64>>, e: Vec<f64>, resolution: f64) -> PyResult<f64> {
    rdf::brute_force_rdf(&matrix(k)?, &constraints(e)?, resolution).map_err(value_err)
}

#[pyfunction]
fn nats_to_bits(nats: f64) -> f64 {
    rdf::nats_to_bits(nats)
}

#[pyclass(get_all, frozen)]
pub struct RdfResult {
    rate_nats: f64,
    rate_bits: f64,
    hadamard_rate_nats: f64,
    gap_nats: f64,
    d_star: Vec<Vec<f64>>,
    sdc_satisfied: bool,
    closed_form: bool,
    newton_steps: usize,
    kkt_residual: f64,
    recon_rank: usize,
    bound_active: usize,
    bound_inertia: usize,
}

#[pymethods]
impl RdfResult {
    fn __repr__(&self) -> String {
        format!(
            "RdfResult(rate_bits={:.6}, sdc_satisfied={}, recon_rank={})",
            self.rate_bits, self.sdc_satisfied, self.recon_rank
        )
    }
}

#[pyfunction]
#[pyo3(signature = (k, e, kkt_tol=1e-6, max_newton=100))]
fn solve_rdf(k: Vec<Vec<f64>>, e: Vec<f64>, kkt_tol: f64, max_newton: usize) -> PyResult<RdfResult> {
    let opts = SolverOptions {
        kkt_tol,
        max_newton,
        ..SolverOptions::default()
    };
    let sol = rdf::solve_maxdet(&matrix(k)?, &constraints(e)?, &opts).map_err(|err| match err {
        SolveError::Input(e) => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    })?;
    Ok(RdfResult {
        rate_nats: sol.rate_nats,
        rate_bits: sol.rate_bits(),
        hadamard_rate_nats: sol.hadamard_rate_nats,
        gap_nats: sol.gap_nats,
        d_star: sol.d_star.to_rows(),
        sdc_satisfied: sol.sdc_satisfied,
        closed_form: sol.closed_form,
        newton_steps: sol.newton_steps,
        kkt_residual: sol.kkt.max_residual(),
        recon_rank: sol.recon.recon_rank,
        bound_active: sol.recon.bound_active,
        bound_inertia: sol.recon.bound_inertia,
    })
}

#[pyclass(get_all, frozen)]
pub struct Rho0Result {
    rho0_m: f64,
    lower_concise: f64,
    lower_sharp: f64,
    upper_concise: f64,
    upper_sharp: f64,
    c_l: f64,
    c_u: f64,
    iterations: usize,
}

#[pymethods]
impl Rho0Result {
    fn __repr__(&self) -> String {
        format!(
            "Rho0Result(rho0_m={:.10}, lower=[{:.10}, {:.10}], upper=[{:.10}, {:.10}])",
            self.rho0_m, self.lower_concise, self.lower_sharp, self.upper_sharp, self.upper_concise
        )
    }
}

#[pyfunction]
fn rho0_max(e: Vec<f64>) -> PyResult<Rho0Result> {
    let r = region::rho0_max(&constraints(e)?).map_err(value_err)?;
    Ok(Rho0Result {
        rho0_m: r.rho0_m,
        lower_concise: r.lower_concise,
        lower_sharp: r.lower_sharp,
        upper_concise: r.upper_concise,
        upper_sharp: r.upper_sharp,
        c_l: r.c_l,
        c_u: r.c_u,
        iterations: r.iterations,
    })
}

#[pyfunction]
fn rho1_max(e: Vec<f64>, rho0: f64) -> PyResult<f64> {
    region::rho1_max(&constraints(e)?, rho0).map_err(value_err)
}

#[pyfunction]
fn region_boundary(e: Vec<f64>, samples: usize) -> PyResult<Vec<(f64, f64)>> {
    region::region_boundary(&constraints(e)?, samples).map_err(value_err)
}

#[pyclass(get_all, frozen)]
pub struct Estimate {
    p_hat: f64,
    trials: u64,
    ci95_half_width: f64,
    seed: u64,
    method: String,
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(p_hat={:.6}, ci95_half_width={:.2e}, trials={}, method={})",
            self.p_hat, self.ci95_half_width, self.trials, self.method
        )
    }
}

impl From<McEstimate> for Estimate {
    fn from(e: McEstimate) -> Self {
        Self {
            p_hat: e.p_hat,
            trials: e.trials,
            ci95_half_width: e.ci95_half_width,
            seed: e.seed,
            method: e.method.to_string(),
        }
    }
}

/// Probability that the SDC holds with `e_i ~ U[0, 1]`. `method` is
/// `"plain"` or `"cmc"`. Releases the GIL while sampling.
#[pyfunction]
#[pyo3(signature = (n, rho0, rho1, trials, seed=1, method="plain"))]
fn sdc_probability(
    py: Python<'_>,
    n: usize,
    rho0: f64,
    rho1: f64,
    trials: u64,
    seed: u64,
    method: &str,
) -> PyResult<Estimate> {
    let run = match method {
        "plain" => probability::sdc_probability_mc,
        "cmc" => probability::sdc_probability_cmc,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method {other:?}; use 'plain' or 'cmc'"
            )))
        }
    };
    let est = py.detach(|| run(n, rho0, rho1, trials, seed)).map_err(value_err)?;
    Ok(est.into())
}

#[pyfunction]
fn decay_rate_fit(points: Vec<(usize, f64)>) -> PyResult<(f64, f64)> {
    probability::decay_rate_fit(&points).map_err(value_err)
}

/// Empirical distortion and source covariance of a simulated backward test
/// channel, as `(distortion, source_covariance)`.
#[pyfunction]
#[pyo3(signature = (k, d_star, samples, seed=1))]
fn test_channel_sim(
    py: Python<'_>,
    k: Vec<Vec<f64>>,
    d_star: Vec<Vec<f64>>,
    samples: u64,
    seed: u64,
) -> PyResult<(Rows, Rows)> {
    let (k, d) = (matrix(k)?, matrix(d_star)?);
    let out = py
        .detach(|| probability::test_channel_sim(&k, &d, samples, seed))
        .map_err(value_err)?;
    Ok((out.distortion.to_rows(), out.source_covariance.to_rows()))
}

#[pymodule]
fn pygaussrd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TwoTypeCorrelation>()?;
    m.add_class::<SdcResult>()?;
    m.add_class::<RdfResult>()?;
    m.add_class::<Rho0Result>()?;
    m.add_class::<Estimate>()?;
    m.add_function(wrap_pyfunction!(sdc_eigen, m)?)?;
    m.add_function(wrap_pyfunction!(sdc_2tc, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard_rate, m)?)?;
    m.add_function(wrap_pyfunction!(rdf_2tc_closed, m)?)?;
    m.add_function(wrap_pyfunction!(rdf_isotropic, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_rdf, m)?)?;
    m.add_function(wrap_pyfunction!(nats_to_bits, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rdf, m)?)?;
    m.add_function(wrap_pyfunction!(rho0_max, m)?)?;
    m.add_function(wrap_pyfunction!(rho1_max, m)?)?;
    m.add_function(wrap_pyfunction!(region_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(sdc_probability, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rate_fit, m)?)?;
    m.add_function(wrap_pyfunction!(test_channel_sim, m)?)?;
    Ok(())
}
