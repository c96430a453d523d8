//! The correlation region where the SDC holds for a 2TC source: the largest
//! peripheral correlation `rho0_m` (with closed-form brackets) and the
//! largest central correlation `rho1_m(rho0)`.

use rayon::prelude::*;

use crate::covariance::DistortionConstraints;
use crate::error::{invalid, Error, Result};
use crate::sdc::chi_sorted;

/// Peripheral constraints closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;
const END_OFFSET: f64 = 1e-13;
const RADICAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho0Result {
    pub rho0_m: f64,
    pub lower_concise: f64,
    pub lower_sharp: f64,
    pub upper_concise: f64,
    pub upper_sharp: f64,
    pub c_l: f64,
    pub c_u: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho0Bounds {
    pub lower_concise: f64,
    pub lower_sharp: f64,
    pub upper_concise: f64,
    pub upper_sharp: f64,
    pub c_l: f64,
    pub c_u: f64,
}

fn sorted_peripherals(e: &DistortionConstraints) -> Result<Vec<f64>> {
    if e.len() < 3 {
        return Err(invalid("e", format!("need n >= 3, got {}", e.len())));
    }
    Ok(e.sorted().split_off(1))
}

/// Brackets on `rho0_m`. With `e_2 >= e_3 >= ...` the sorted peripherals and
/// `ē_3` the mean of `e_3..e_n`:
///
/// ```text
/// c_l = 2 (e2 - e3) / (sqrt((1 - e3)/(1 - e2)) + 1),   c_u = e2 - ē3
/// lower_concise = 1 - e2 + c_l / n,   upper_concise = 1 - e2 + c_u / (n - 1)
/// ```
pub fn rho0_bounds(e: &DistortionConstraints) -> Result<Rho0Bounds> {
    let p = sorted_peripherals(e)?;
    let n = e.len() as f64;
    let (e2, e3) = (p[0], p[1]);
    let e3_bar = p[1..].iter().sum::<f64>() / (p.len() - 1) as f64;
    let a = 1.0 - e2;
    let c_l = 2.0 * (e2 - e3) / (((1.0 - e3) / a).sqrt() + 1.0);
    let c_u = e2 - e3_bar;
    let lower_sharp =
        a * ((n - 2.0) + ((n - 2.0).powi(2) + 4.0 * (n - 1.0) * (1.0 - e3) / a).sqrt()) / (2.0 * (n - 1.0));
    let upper_sharp =
        a * ((n - 3.0) + ((n - 3.0).powi(2) + 4.0 * (n - 2.0) * (1.0 - e3_bar) / a).sqrt()) / (2.0 * (n - 2.0));
    Ok(Rho0Bounds {
        lower_concise: a + c_l / n,
        lower_sharp,
        upper_concise: a + c_u / (n - 1.0),
        upper_sharp,
        c_l,
        c_u,
    })
}

/// Largest `rho0` for which the peripheral conditions hold, i.e. the root of
/// `rho0 / (rho0 + e2 - 1) = 1 + sum_{i>=3} rho0 / (1 - rho0 - e_i)` on
/// `(1 - e2, 1 - e3)`, found by bisection down to adjacent floats. The
/// returned root is the feasible end of the final bracket. Tied `e2 = e3`
/// gives `1 - e2`.
pub fn rho0_max(e: &DistortionConstraints) -> Result<Rho0Result> {
    let p = sorted_peripherals(e)?;
    let b = rho0_bounds(e)?;
    let (e2, e3) = (p[0], p[1]);
    let finish = |rho0_m, iterations| Rho0Result {
        rho0_m,
        lower_concise: b.lower_concise,
        lower_sharp: b.lower_sharp,
        upper_concise: b.upper_concise,
        upper_sharp: b.upper_sharp,
        c_l: b.c_l,
        c_u: b.c_u,
        iterations,
    };
    if e2 - e3 <= TIE_TOL {
        return Ok(finish(1.0 - e2, 0));
    }
    let h = |rho0: f64| {
        let f = rho0 / (rho0 + e2 - 1.0);
        let g = 1.0 + p[1..].iter().map(|ei| rho0 / (1.0 - rho0 - ei)).sum::<f64>();
        f - g
    };
    let (mut lo, mut hi) = (1.0 - e2 + END_OFFSET, 1.0 - e3 - END_OFFSET);
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(finish(lo, iterations))
}

/// Largest `rho1` satisfying the central condition at the given `rho0`:
/// `sqrt((1/chi_2 + rho0)(1 - e_1))`, or `sqrt((1 - e_1)(1 - e_2))` for
/// `n = 2`. At a χ₂ pole the limit `1/chi_2 -> 0` is used.
pub fn rho1_max(e: &DistortionConstraints, rho0: f64) -> Result<f64> {
    if !(rho0.is_finite() && (0.0..1.0).contains(&rho0)) {
        return Err(invalid("rho0", format!("{rho0} is outside [0, 1)")));
    }
    let s = e.sorted();
    match s.len() {
        1 => return Err(invalid("e", "need n >= 2")),
        2 => return Ok(((1.0 - s[0]) * (1.0 - s[1])).sqrt()),
        _ => {}
    }
    let limit = rho0_max(e)?.rho0_m;
    if rho0 > limit + TIE_TOL {
        return Err(invalid("rho0", format!("{rho0} exceeds rho0_max = {limit}")));
    }
    let inv_chi2 = match chi_sorted(1, rho0, &s) {
        Ok(chi2) => 1.0 / chi2,
        Err(Error::ChiPole { .. }) => 0.0,
        Err(other) => return Err(other),
    };
    let radicand = (inv_chi2 + rho0) * (1.0 - s[0]);
    if radicand < -RADICAND_SLACK {
        return Err(Error::NegativeRadicand { value: radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// `samples` points `(rho0, rho1_max(rho0))` on a uniform grid over `[0, rho0_m]`.
pub fn region_boundary(e: &DistortionConstraints, samples: usize) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(invalid("samples", "need at least 2"));
    }
    let top = rho0_max(e)?.rho0_m;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let rho0 = if i + 1 == samples {
                top
            } else {
                top * i as f64 / (samples - 1) as f64
            };
            rho1_max(e, rho0).map(|r| (rho0, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::TwoTypeCorrelation;
    use crate::sdc::sdc_2tc;
    use proptest::prelude::*;

    fn dc(v: &[f64]) -> DistortionConstraints {
        DistortionConstraints::new(v.to_vec()).unwrap()
    }

    fn sdc_holds(n: usize, rho0: f64, rho1: f64, e: &DistortionConstraints) -> bool {
        match TwoTypeCorrelation::new(n, rho0, rho1) {
            Ok(tc) => sdc_2tc(&tc, e).unwrap().satisfied,
            Err(_) => false,
        }
    }

    #[test]
    fn three_component_root() {
        let e = dc(&[0.5, 0.5, 0.3]);
        let r = rho0_max(&e).unwrap();
        assert!((r.rho0_m - 0.35f64.sqrt()).abs() < 1e-9);
        assert!((r.lower_concise - 0.56107).abs() < 1e-5);
        assert!((r.upper_concise - 0.6).abs() < 1e-14);
        assert!((r.lower_sharp - 0.5 * (1.0 + 12.2f64.sqrt()) / 4.0).abs() < 1e-14);
        assert!((r.upper_sharp - 0.35f64.sqrt()).abs() < 1e-14);
        assert!(r.lower_concise <= r.lower_sharp && r.lower_sharp <= r.rho0_m && r.rho0_m <= r.upper_concise);
    }

    #[test]
    fn tied_peripherals() {
        let r = rho0_max(&dc(&[0.9, 0.4, 0.4, 0.4])).unwrap();
        assert_eq!(r.rho0_m, 0.6);
        assert_eq!(r.c_l, 0.0);
        assert_eq!(r.c_u, 0.0);
        for v in [r.lower_concise, r.lower_sharp, r.upper_concise, r.upper_sharp] {
            assert!((v - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn rho1_examples() {
        let e = dc(&[0.5, 0.5, 0.3]);
        let r1 = rho1_max(&e, 0.2).unwrap();
        assert!((r1 - (0.3875f64 * 0.5).sqrt()).abs() < 1e-12);
        assert!((r1 - 0.44017).abs() < 1e-5);
        assert!(sdc_holds(3, 0.2, r1 - 1e-9, &e));
        assert!(!sdc_holds(3, 0.2, r1 + 1e-6, &e));

        assert_eq!(rho1_max(&dc(&[1.0, 0.5, 0.3]), 0.2).unwrap(), 0.0);

        let top = rho0_max(&e).unwrap().rho0_m;
        assert!(rho1_max(&e, top).unwrap() <= 1e-6);
        assert!(rho1_max(&e, top + 1e-3).is_err());

        assert!((rho1_max(&dc(&[0.5, 0.5]), 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rho1_at_pole_uses_limit() {
        let e = dc(&[0.5, 0.6, 0.3]);
        let r = rho1_max(&e, 0.4).unwrap();
        assert!((r - (0.4f64 * 0.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn boundary_membership() {
        let e = dc(&[0.5, 0.5, 0.3, 0.2]);
        let pts = region_boundary(&e, 9).unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0].0, 0.0);
        assert_eq!(pts[8].0, rho0_max(&e).unwrap().rho0_m);
        assert!(pts[8].1 <= 1e-6);
        for &(rho0, rho1) in &pts {
            assert!(sdc_holds(4, rho0, (rho1 - 1e-9).max(0.0), &e), "{rho0} {rho1}");
            assert!(!sdc_holds(4, rho0, rho1 + 1e-6, &e), "{rho0} {rho1}");
        }
        assert!(region_boundary(&e, 1).is_err());
    }

    #[test]
    fn root_is_feasible_edge() {
        let e = dc(&[0.5, 0.45, 0.3, 0.25, 0.1]);
        let top = rho0_max(&e).unwrap().rho0_m;
        assert!(sdc_holds(5, top - 1e-8, 0.0, &e));
        assert!(!sdc_holds(5, top + 1e-6, 0.0, &e));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn bounds_bracket_root(n in 3usize..60, seed in proptest::collection::vec(0.001f64..0.999, 60)) {
            let mut v: Vec<f64> = seed[..n].to_vec();
            v[0] = 0.5;
            let e = dc(&v);
            let s = e.sorted();
            prop_assume!(s[1] - s[2] > 1e-9);
            let r = rho0_max(&e).unwrap();
            let tol = 1e-10;
            prop_assert!(r.lower_concise <= r.lower_sharp + tol);
            prop_assert!(r.lower_sharp <= r.rho0_m + tol);
            prop_assert!(r.rho0_m <= r.upper_concise + tol);
            prop_assert!(r.rho0_m <= r.upper_sharp + tol);
            prop_assert!(1.0 - s[1] < r.rho0_m && r.rho0_m < 1.0 - s[2]);
            let scaled = (r.rho0_m - (1.0 - s[1])) * n as f64;
            prop_assert!(scaled >= r.c_l - 1e-8 && scaled <= r.c_u * n as f64 / (n as f64 - 1.0) + 1e-8);
        }
    }
}
