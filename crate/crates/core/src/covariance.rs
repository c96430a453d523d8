//! Source covariance matrices: dense symmetric storage, the two-type
//! correlation (2TC) family, its arrowhead determinant, and variance
//! normalization of arbitrary sources.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Relative asymmetry accepted when building from a full matrix. The stored
/// matrix is symmetrized from the upper triangle afterwards.
const SYMMETRY_RTOL: f64 = 1e-12;

/// Shifts `|1 - gamma_i - rho0|` below this make the arrowhead closed form
/// unstable.
pub const SINGULAR_SHIFT_TOL: f64 = 1e-12;

/// Dense real symmetric matrix. Entries are exactly symmetric and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Builds from row-major rows. Small asymmetries (relative 1e-12) are
    /// averaged away; larger ones are rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m.ncols() != n {
            return Err(Error::NotSquare {
                row: 0,
                len: m.ncols(),
                expected: n,
            });
        }
        let mut scale = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                scale = scale.max(v.abs());
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_RTOL * scale.max(1.0) {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        upper: a,
                        lower: b,
                    });
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds from a closure evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "dimension must be positive");
        let m = DMatrix::from_fn(n, n, |i, j| if i <= j { f(i, j) } else { f(j, i) });
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }))
    }

    fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    /// Symmetrizes the result of arithmetic that is symmetric up to rounding.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self::symmetrized(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// `self - other`.
    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        Self(&self.0 - &other.0)
    }

    /// `self - diag(d)`.
    pub fn sub_diagonal(&self, d: &[f64]) -> SymmetricMatrix {
        assert_eq!(d.len(), self.n(), "diagonal length");
        let mut m = self.0.clone();
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] -= v;
        }
        Self(m)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in non-increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("n >= 1")
    }

    /// Spectrum with the default scale-aware zero tolerance.
    pub fn spectrum(&self) -> Spectrum {
        inertia(self, default_inertia_tol(self))
    }

    /// Determinant through LU factorization.
    pub fn determinant(&self) -> f64 {
        self.0.clone().lu().determinant()
    }

    /// `ln det` through Cholesky; `None` when the matrix is not positive
    /// definite.
    pub fn log_det_pd(&self) -> Option<f64> {
        let chol = self.0.clone().cholesky()?;
        let l = chol.l_dirty();
        // nalgebra accepts a zero pivot
        if (0..self.n()).any(|i| l[(i, i)] <= 0.0) {
            return None;
        }
        Some(2.0 * (0..self.n()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.log_det_pd().is_some()
    }
}

/// Counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Eigenvalues (non-increasing) and the inertia they induce at tolerance `tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub inertia: Inertia,
    pub tol: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, tol: f64) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let positive = eigenvalues.iter().filter(|&&v| v > tol).count();
        let negative = eigenvalues.iter().filter(|&&v| v < -tol).count();
        let zero = eigenvalues.len() - positive - negative;
        Spectrum {
            eigenvalues,
            inertia: Inertia {
                positive,
                negative,
                zero,
            },
            tol,
        }
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn product(&self) -> f64 {
        self.eigenvalues.iter().product()
    }
}

/// `1e-8 * max(1, ||m||_inf)`.
pub fn default_inertia_tol(m: &SymmetricMatrix) -> f64 {
    1e-8 * m.inf_norm().max(1.0)
}

/// Full symmetric eigendecomposition with inertia counted against `tol`.
pub fn inertia(m: &SymmetricMatrix, tol: f64) -> Spectrum {
    assert!(tol > 0.0, "inertia tolerance must be positive");
    Spectrum::from_eigenvalues(m.eigenvalues(), tol)
}

/// Parameters of the two-type correlation covariance: unit diagonal, central
/// correlation `rho1` on the first row and column, peripheral correlation
/// `rho0` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTypeCorrelation {
    n: usize,
    rho0: f64,
    rho1: f64,
}

impl TwoTypeCorrelation {
    /// Validates `n >= 2`, `rho0, rho1 in [0, 1)` and positive definiteness
    /// `(n-2) rho0 + 1 - (n-1) rho1^2 > 0`.
    pub fn new(n: usize, rho0: f64, rho1: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("need n >= 2, got {n}")));
        }
        for (name, v) in [("rho0", rho0), ("rho1", rho1)] {
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                return Err(invalid(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        let tc = Self { n, rho0, rho1 };
        let margin = tc.pd_margin();
        if margin <= 0.0 {
            return Err(Error::TwoTypeNotPositiveDefinite { margin });
        }
        Ok(tc)
    }

    /// Isotropic correlation `rho0 = rho1 = rho`.
    pub fn isotropic(n: usize, rho: f64) -> Result<Self> {
        Self::new(n, rho, rho)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    /// `(n-2) rho0 + 1 - (n-1) rho1^2`; positive iff the matrix is PD.
    pub fn pd_margin(&self) -> f64 {
        let n = self.n as f64;
        (n - 2.0) * self.rho0 + 1.0 - (n - 1.0) * self.rho1 * self.rho1
    }

    pub fn matrix(&self) -> SymmetricMatrix {
        build_2tc(self)
    }

    /// `det K = (1-rho0)^(n-2) * ((n-2) rho0 + 1 - (n-1) rho1^2)`.
    pub fn determinant(&self) -> f64 {
        (1.0 - self.rho0).powi(self.n as i32 - 2) * self.pd_margin()
    }
}

pub fn build_2tc(tc: &TwoTypeCorrelation) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(tc.n, |i, j| {
        if i == j {
            1.0
        } else if i == 0 {
            tc.rho1
        } else {
            tc.rho0
        }
    })
}

/// Closed-form spectrum of the 2TC matrix: `1 - rho0` with multiplicity
/// `n - 2`, and `1 + (n-2) rho0 / 2 ± sqrt((n-2)^2 rho0^2 + 4 (n-1) rho1^2) / 2`.
pub fn tc2_spectrum(tc: &TwoTypeCorrelation) -> Spectrum {
    let n = tc.n as f64;
    let half_trace = 1.0 + 0.5 * (n - 2.0) * tc.rho0;
    let half_root = 0.5 * ((n - 2.0).powi(2) * tc.rho0 * tc.rho0 + 4.0 * (n - 1.0) * tc.rho1 * tc.rho1).sqrt();
    let mut ev = vec![1.0 - tc.rho0; tc.n - 2];
    ev.push(half_trace + half_root);
    ev.push(half_trace - half_root);
    let tol = default_inertia_tol(&build_2tc(tc));
    Spectrum::from_eigenvalues(ev, tol)
}

/// Determinant of `K_2tc - diag(gamma)` by the arrowhead closed form
///
/// `(g1 + sum_{i>=2} (rho0 g1 - rho1^2) / (g_i - rho0)) * prod_{i>=2} (g_i - rho0)`
///
/// with `g_i = 1 - gamma_i`. Fails with [`Error::SingularShift`] when some
/// `g_i - rho0` vanishes; [`shifted_det_2tc`] falls back to LU there.
pub fn arrowhead_det(rho0: f64, rho1: f64, gamma: &[f64]) -> Result<f64> {
    if gamma.len() < 2 {
        return Err(invalid("gamma", "need at least two components"));
    }
    if gamma.iter().any(|g| !g.is_finite()) || !rho0.is_finite() || !rho1.is_finite() {
        return Err(invalid("gamma", "entries must be finite"));
    }
    let g1 = 1.0 - gamma[0];
    let mut sum = 0.0;
    let mut prod = 1.0;
    for (offset, g) in gamma[1..].iter().enumerate() {
        let shift = 1.0 - g - rho0;
        if shift.abs() < SINGULAR_SHIFT_TOL {
            return Err(Error::SingularShift {
                index: offset + 1,
                value: shift,
            });
        }
        sum += (rho0 * g1 - rho1 * rho1) / shift;
        prod *= shift;
    }
    Ok((g1 + sum) * prod)
}

/// `det(K_2tc - diag(gamma))`, closed form away from singular shifts and LU
/// otherwise.
pub fn shifted_det_2tc(tc: &TwoTypeCorrelation, gamma: &[f64]) -> Result<f64> {
    if gamma.len() != tc.n {
        return Err(Error::DimensionMismatch {
            expected: tc.n,
            got: gamma.len(),
        });
    }
    match arrowhead_det(tc.rho0, tc.rho1, gamma) {
        Err(Error::SingularShift { .. }) => Ok(build_2tc(tc).sub_diagonal(gamma).determinant()),
        other => other,
    }
}

/// Per-component distortion constraints `e_i in (0, 1]`, together with the
/// ordering that sorts the peripheral components (all but the first)
/// non-increasingly.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionConstraints {
    values: Vec<f64>,
    perm: Vec<usize>,
}

impl DistortionConstraints {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("e", "need at least one component"));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0 && **v <= 1.0))
        {
            return Err(invalid("e", format!("e[{i}] = {v} is outside (0, 1]")));
        }
        let mut perm: Vec<usize> = (1..values.len()).collect();
        // stable: ties keep original index order
        perm.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        perm.insert(0, 0);
        Ok(Self { values, perm })
    }

    /// The same constraint on every component.
    pub fn uniform(n: usize, e: f64) -> Result<Self> {
        Self::new(vec![e; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in original component order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `perm[k]` is the original index of the component at sorted position
    /// `k`; `perm[0] == 0`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Values in sorted order: the central constraint first, then the
    /// peripherals non-increasing.
    pub fn sorted(&self) -> Vec<f64> {
        self.perm.iter().map(|&i| self.values[i]).collect()
    }

    pub fn central(&self) -> f64 {
        self.values[0]
    }

    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }

    pub fn geometric_mean(&self) -> f64 {
        (self.values.iter().map(|v| v.ln()).sum::<f64>() / self.len() as f64).exp()
    }

    pub fn matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_diagonal(&self.values)
    }
}

/// A source brought to unit variances, with the constraints rescaled to match.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSource {
    pub k: SymmetricMatrix,
    pub e: DistortionConstraints,
    pub variances: Vec<f64>,
    /// `true` where `d_i / sigma_i^2 > 1` was clamped to 1 (vacuous constraint).
    pub clamped: Vec<bool>,
}

impl NormalizedSource {
    /// Rebuilds `V^(1/2) K V^(1/2)`.
    pub fn denormalize(&self) -> SymmetricMatrix {
        let s: Vec<f64> = self.variances.iter().map(|v| v.sqrt()).collect();
        SymmetricMatrix::from_fn(self.k.n(), |i, j| s[i] * self.k.get(i, j) * s[j])
    }
}

/// Normalizes `sigma` to the correlation matrix `V^(-1/2) sigma V^(-1/2)` and
/// maps raw distortions to `e_i = min(d_i / sigma_ii, 1)`.
pub fn normalize_source(sigma: &SymmetricMatrix, raw_distortions: &[f64]) -> Result<NormalizedSource> {
    let n = sigma.n();
    if raw_distortions.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: raw_distortions.len(),
        });
    }
    let variances = sigma.diagonal();
    if let Some((i, v)) = variances.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(invalid("covariance", format!("variance {i} is {v}, must be positive")));
    }
    if let Some((i, d)) = raw_distortions
        .iter()
        .enumerate()
        .find(|(_, d)| !(d.is_finite() && **d > 0.0))
    {
        return Err(invalid("raw_distortions", format!("d[{i}] = {d} must be positive")));
    }
    if !sigma.is_positive_definite() {
        return Err(Error::NotPositiveDefinite {
            what: "source covariance",
        });
    }
    let inv_sd: Vec<f64> = variances.iter().map(|v| 1.0 / v.sqrt()).collect();
    let k = SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            inv_sd[i] * sigma.get(i, j) * inv_sd[j]
        }
    });
    let mut clamped = vec![false; n];
    let e: Vec<f64> = raw_distortions
        .iter()
        .zip(&variances)
        .enumerate()
        .map(|(i, (d, v))| {
            let r = d / v;
            if r > 1.0 {
                clamped[i] = true;
                1.0
            } else {
                r
            }
        })
        .collect();
    Ok(NormalizedSource {
        k,
        e: DistortionConstraints::new(e)?,
        variances,
        clamped,
    })
}
