//! Figure data: per-component rate versus length, SDC probability versus
//! length, and the maximum peripheral correlation versus length.

use std::path::{Path, PathBuf};

use gaussrd::probability::decay_rate_fit;
use gaussrd::rdf::avg_rate_per_component;
use gaussrd::region::rho0_max;
use gaussrd::DistortionConstraints;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::estimate;
use crate::instance::from_core;
use crate::output::{num, write_file, Csv};
use crate::svg::{LinePlot, Series};
use crate::{CliError, GlobalArgs, McMethod, Unit, Which};

pub const FIG1_RHOS: [f64; 4] = [0.0, 0.2, 0.4, 0.6];
pub const FIG1_E: f64 = 0.25;
pub const FIG1_MAX_N: usize = 200;
pub const FIG3_NS: [usize; 18] = [3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone)]
pub struct FigureConfig {
    pub trials: u64,
    pub rho0_list: Vec<f64>,
    pub rho1: f64,
    pub max_n: usize,
    pub draws: usize,
    pub e2: f64,
}

pub fn run(g: &GlobalArgs, which: Which, cfg: &FigureConfig) -> Result<(), CliError> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let unit = g.unit();
    if matches!(which, Which::One | Which::All) {
        figure1(&dir, unit)?;
    }
    if matches!(which, Which::Two | Which::All) {
        figure2(&dir, g.seed, cfg)?;
    }
    if matches!(which, Which::Three | Which::All) {
        figure3(&dir, g.seed, cfg)?;
    }
    Ok(())
}

fn save(dir: &Path, stem: &str, csv: &Csv, plot: &LinePlot) -> Result<(), CliError> {
    let a = write_file(dir, &format!("{stem}.csv"), csv.as_str())?;
    let b = write_file(dir, &format!("{stem}.svg"), &plot.render())?;
    println!("wrote {} {}", a.display(), b.display());
    Ok(())
}

fn figure1(dir: &Path, unit: Unit) -> Result<(), CliError> {
    let u = unit.suffix();
    let exact = format!("rate_{u}");
    let asym = format!("asymptote_{u}");
    let mut csv = Csv::new(&["n", "rho", &exact, &asym, "reduction_pct"]);
    let mut series = Vec::new();
    for (c, &rho) in FIG1_RHOS.iter().enumerate() {
        let mut pts = Vec::new();
        let mut lim = Vec::new();
        for n in 2..=FIG1_MAX_N {
            let e = DistortionConstraints::uniform(n, FIG1_E).map_err(from_core)?;
            let r = avg_rate_per_component(n, rho, &e).map_err(from_core)?;
            let base = avg_rate_per_component(n, 0.0, &e).map_err(from_core)?;
            let reduction = 100.0 * (1.0 - r.exact / base.exact);
            csv.row(vec![
                n.into(),
                rho.into(),
                unit.convert(r.exact).into(),
                unit.convert(r.leading_term).into(),
                reduction.into(),
            ]);
            pts.push((n as f64, unit.convert(r.exact)));
            lim.push((n as f64, unit.convert(r.leading_term)));
        }
        series.push(Series {
            label: format!("rho={rho}"),
            points: pts,
            dashed: false,
            color: c,
        });
        if rho > 0.0 {
            series.push(Series {
                label: format!("rho={rho} limit"),
                points: lim,
                dashed: true,
                color: c,
            });
        }
    }
    let plot = LinePlot {
        title: format!("Rate per component, e = {FIG1_E}"),
        x_label: "source length N".into(),
        y_label: format!("rate per component ({u})"),
        log_y: false,
        series,
    };
    save(dir, "fig1", &csv, &plot)
}

fn figure2(dir: &Path, seed: u64, cfg: &FigureConfig) -> Result<(), CliError> {
    if cfg.max_n < 3 {
        return Err(CliError::Input("--max-n must be at least 3".into()));
    }
    let mut csv = Csv::new(&["n", "rho0", "rho1", "p_hat", "ci95", "method"]);
    let mut fit = Csv::new(&["rho0", "slope", "intercept", "ln_1_minus_rho0", "ratio"]);
    let mut series = Vec::new();
    for (c, &rho0) in cfg.rho0_list.iter().enumerate() {
        let mut pts = Vec::new();
        for n in 3..=cfg.max_n {
            let est = estimate(McMethod::Plain, n, rho0, cfg.rho1, cfg.trials, seed)?;
            csv.row(vec![
                n.into(),
                rho0.into(),
                cfg.rho1.into(),
                est.p_hat.into(),
                est.ci95_half_width.into(),
                est.method.to_string().into(),
            ]);
            pts.push((n, est.p_hat));
        }
        let positive: Vec<(usize, f64)> = pts.iter().copied().filter(|p| p.1 > 0.0).collect();
        if let Ok((slope, intercept)) = decay_rate_fit(&positive) {
            let reference = (1.0 - rho0).ln();
            fit.row(vec![
                rho0.into(),
                slope.into(),
                intercept.into(),
                reference.into(),
                (slope / reference).into(),
            ]);
        }
        series.push(Series {
            label: format!("rho0={rho0}"),
            points: pts.iter().map(|&(n, p)| (n as f64, p)).collect(),
            dashed: false,
            color: c,
        });
    }
    write_file(dir, "fig2_fit.csv", fit.as_str())?;
    let plot = LinePlot {
        title: format!("P(SDC) with e_i ~ U[0,1], rho1 = {}", cfg.rho1),
        x_label: "source length N".into(),
        y_label: "probability".into(),
        log_y: true,
        series,
    };
    save(dir, "fig2", &csv, &plot)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Per-length summary of `rho0_m` over random `e_3..e_n ~ U[0, e2]`.
pub struct Fig3Row {
    pub n: usize,
    pub mean: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub lower_concise: f64,
    pub lower_sharp: f64,
    pub upper_concise: f64,
    pub upper_sharp: f64,
    pub n_gap_min: f64,
    pub n_gap_mean: f64,
    pub n_gap_max: f64,
    pub c_l_min: f64,
    pub c_u_max: f64,
    pub bracket_violations: usize,
}

pub fn figure3_rows(seed: u64, draws: usize, e2: f64) -> Result<Vec<Fig3Row>, CliError> {
    if draws == 0 {
        return Err(CliError::Input("--draws must be at least 1".into()));
    }
    if !(e2 > 0.0 && e2 < 1.0) {
        return Err(CliError::Input("--e2 must lie in (0, 1)".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &n in &FIG3_NS {
        let mut rng = base.clone();
        rng.set_stream(n as u64);
        let mut roots = Vec::with_capacity(draws);
        let mut sums = [0.0; 4];
        let (mut c_l_min, mut c_u_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut violations = 0;
        for _ in 0..draws {
            let mut v = vec![0.5, e2];
            v.extend((2..n).map(|_| e2 * rng.random::<f64>()));
            let e = DistortionConstraints::new(v).map_err(from_core)?;
            let r = rho0_max(&e).map_err(from_core)?;
            roots.push(r.rho0_m);
            sums[0] += r.lower_concise;
            sums[1] += r.lower_sharp;
            sums[2] += r.upper_concise;
            sums[3] += r.upper_sharp;
            c_l_min = c_l_min.min(r.c_l);
            c_u_max = c_u_max.max(r.c_u);
            let tol = 1e-10;
            if !(r.lower_concise <= r.lower_sharp + tol
                && r.lower_sharp <= r.rho0_m + tol
                && r.rho0_m <= r.upper_concise + tol)
            {
                violations += 1;
            }
        }
        let m = draws as f64;
        let gaps: Vec<f64> = roots.iter().map(|r| n as f64 * (r - (1.0 - e2))).collect();
        let mean = roots.iter().sum::<f64>() / m;
        roots.sort_by(f64::total_cmp);
        rows.push(Fig3Row {
            n,
            mean,
            q05: quantile(&roots, 0.05),
            median: quantile(&roots, 0.5),
            q95: quantile(&roots, 0.95),
            lower_concise: sums[0] / m,
            lower_sharp: sums[1] / m,
            upper_concise: sums[2] / m,
            upper_sharp: sums[3] / m,
            n_gap_min: gaps.iter().copied().fold(f64::INFINITY, f64::min),
            n_gap_mean: gaps.iter().sum::<f64>() / m,
            n_gap_max: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            c_l_min,
            c_u_max,
            bracket_violations: violations,
        });
    }
    Ok(rows)
}

fn figure3(dir: &Path, seed: u64, cfg: &FigureConfig) -> Result<(), CliError> {
    let rows = figure3_rows(seed, cfg.draws, cfg.e2)?;
    let mut csv = Csv::new(&[
        "n",
        "e2",
        "rho0m_mean",
        "rho0m_q05",
        "rho0m_median",
        "rho0m_q95",
        "lower_concise_mean",
        "lower_sharp_mean",
        "upper_concise_mean",
        "upper_sharp_mean",
        "n_gap_min",
        "n_gap_mean",
        "n_gap_max",
        "c_l_min",
        "c_u_max",
        "bracket_violations",
    ]);
    for r in &rows {
        csv.row(vec![
            r.n.into(),
            cfg.e2.into(),
            r.mean.into(),
            r.q05.into(),
            r.median.into(),
            r.q95.into(),
            r.lower_concise.into(),
            r.lower_sharp.into(),
            r.upper_concise.into(),
            r.upper_sharp.into(),
            r.n_gap_min.into(),
            r.n_gap_mean.into(),
            r.n_gap_max.into(),
            r.c_l_min.into(),
            r.c_u_max.into(),
            r.bracket_violations.into(),
        ]);
    }
    let line = |label: &str, f: &dyn Fn(&Fig3Row) -> f64, dashed: bool, color: usize| Series {
        label: label.into(),
        points: rows.iter().map(|r| (r.n as f64, f(r))).collect(),
        dashed,
        color,
    };
    let plot = LinePlot {
        title: format!("Maximum peripheral correlation, e2 = {}", num(cfg.e2)),
        x_label: "source length N".into(),
        y_label: "rho0".into(),
        log_y: false,
        series: vec![
            line("rho0m (mean)", &|r| r.mean, false, 0),
            line("lower concise", &|r| r.lower_concise, true, 1),
            line("lower sharp", &|r| r.lower_sharp, false, 1),
            line("upper concise", &|r| r.upper_concise, true, 2),
            line("upper sharp", &|r| r.upper_sharp, false, 2),
            line("1 - e2", &|_| 1.0 - cfg.e2, true, 7),
        ],
    };
    save(dir, "fig3", &csv, &plot)
}
