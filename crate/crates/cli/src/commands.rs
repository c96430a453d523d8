use std::path::{Path, PathBuf};

use gaussrd::probability::{decay_rate_fit, sdc_probability_cmc, sdc_probability_mc, McEstimate};
use gaussrd::rdf::{rdf_2tc_closed, solve_maxdet, RdfSolution, SolveError, SolverOptions};
use gaussrd::region::rho0_max;
use gaussrd::sdc::{sdc_2tc, sdc_eigen, SdcReport, SdcRoute};
use gaussrd::DistortionConstraints;

use crate::instance::{self, from_core};
use crate::output::{num, short, write_file, Csv};
use crate::{CliError, GlobalArgs, McMethod, SolverArgs, Unit};

fn verdict(satisfied: bool) -> &'static str {
    if satisfied {
        "satisfied"
    } else {
        "violated"
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "violated"
    }
}

fn print_solution(sol: &RdfSolution, unit: Unit) {
    let u = unit.suffix();
    let rate = unit.convert(sol.rate_nats);
    if sol.sdc_satisfied {
        println!(
            "rate_{u}={rate:.4} sdc=satisfied gap={}",
            short(unit.convert(sol.gap_nats))
        );
    } else {
        println!("rate_{u}={rate:.4} sdc=violated recon_rank={}", sol.recon.recon_rank);
    }
    println!(
        "hadamard_{u}={} gap_{u}={} closed_form={} newton_steps={}",
        num(unit.convert(sol.hadamard_rate_nats)),
        num(unit.convert(sol.gap_nats)),
        sol.closed_form,
        sol.newton_steps
    );
    println!(
        "kkt stationarity={} slack_psd={} slack_diag={} max={}",
        num(sol.kkt.stationarity_residual),
        num(sol.kkt.slack1_residual),
        num(sol.kkt.slack2_residual),
        num(sol.kkt.max_residual())
    );
    let r = &sol.recon;
    println!(
        "recon rank={} det={} bound_active={} bound_inertia={} rank_bound={} det_dichotomy={}",
        r.recon_rank,
        num(r.det_gap),
        r.bound_active,
        r.bound_inertia,
        ok(r.rank_bound_holds),
        ok(r.det_dichotomy_holds)
    );
}

fn write_solution(dir: &Path, sol: &RdfSolution, unit: Unit) -> Result<(), CliError> {
    let n = sol.d_star.n();
    let header: Vec<String> = (0..n).map(|j| format!("d{j}")).collect();
    let mut d = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for i in 0..n {
        d.row((0..n).map(|j| sol.d_star.get(i, j).into()).collect());
    }
    write_file(dir, "d_star.csv", d.as_str())?;

    let u = unit.suffix();
    let rate = format!("rate_{u}");
    let hadamard = format!("hadamard_{u}");
    let gap = format!("gap_{u}");
    let mut s = Csv::new(&[&rate, &hadamard, &gap, "sdc", "recon_rank", "kkt_max", "newton_steps"]);
    s.row(vec![
        unit.convert(sol.rate_nats).into(),
        unit.convert(sol.hadamard_rate_nats).into(),
        unit.convert(sol.gap_nats).into(),
        verdict(sol.sdc_satisfied).into(),
        sol.recon.recon_rank.into(),
        sol.kkt.max_residual().into(),
        sol.newton_steps.into(),
    ]);
    write_file(dir, "rdf.csv", s.as_str())?;
    Ok(())
}

pub fn rdf(g: &GlobalArgs, path: &Path, args: &SolverArgs) -> Result<(), CliError> {
    let inst = instance::load(path)?;
    let unit = g.unit();
    let opts = SolverOptions {
        mu0: args.mu0,
        mu_factor: args.mu_factor,
        kkt_tol: args.kkt_tol,
        max_newton: args.max_newton,
        ..SolverOptions::default()
    };
    if !(opts.mu0 > 0.0 && opts.mu_factor > 1.0 && opts.kkt_tol > 0.0 && opts.max_newton > 0) {
        return Err(CliError::Input(
            "solver options need mu0 > 0, mu-factor > 1, kkt-tol > 0, max-newton > 0".into(),
        ));
    }
    if let Some(norm) = &inst.normalized {
        let clamped: Vec<String> = (0..norm.clamped.len())
            .filter(|&i| norm.clamped[i])
            .map(|i| i.to_string())
            .collect();
        eprintln!(
            "normalized to unit variances; clamped components: [{}]",
            clamped.join(",")
        );
    }
    match solve_maxdet(&inst.k, &inst.e, &opts) {
        Ok(sol) => {
            print_solution(&sol, unit);
            if let Some(tc) = &inst.tc {
                if sol.sdc_satisfied {
                    let closed = rdf_2tc_closed(tc, &inst.e).map_err(from_core)?;
                    println!("closed_form_2tc_{}={}", unit.suffix(), num(unit.convert(closed)));
                }
            }
            if let Some(dir) = &g.out {
                write_solution(dir, &sol, unit)?;
            }
            Ok(())
        }
        Err(SolveError::Input(err)) => Err(from_core(err)),
        Err(err) => {
            if let Some(best) = err.best() {
                println!("status=failed best iterate follows");
                print_solution(best, unit);
            }
            Err(CliError::Solver(err.to_string()))
        }
    }
}

fn print_sdc(report: &SdcReport) {
    let route = match report.route {
        SdcRoute::Spectral => "spectral",
        SdcRoute::Scalar => "scalar",
        SdcRoute::ScalarFallback => "scalar-fallback",
    };
    println!(
        "sdc={} active={} lambda_min={} route={route}",
        verdict(report.satisfied),
        report.active,
        num(report.min_gap_eigenvalue())
    );
    let i = report.gap_spectrum.inertia;
    println!(
        "inertia positive={} zero={} negative={}",
        i.positive, i.zero, i.negative
    );
    if report.route == SdcRoute::Scalar {
        let failed = report.failed_condition.map_or("none".to_string(), |c| c.to_string());
        let chi2 = report.chi2.map_or("-".to_string(), num);
        let chi3 = report.chi3.map_or("-".to_string(), num);
        println!("chi2={chi2} chi3={chi3} failed={failed}");
    }
}

pub fn sdc(g: &GlobalArgs, path: &Path) -> Result<(), CliError> {
    let inst = instance::load(path)?;
    let report = match (&inst.tc, g.tol) {
        (Some(tc), None) => sdc_2tc(tc, &inst.e),
        _ => sdc_eigen(&inst.k, &inst.e, g.tol),
    }
    .map_err(from_core)?;
    print_sdc(&report);
    Ok(())
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("cannot parse {t:?} as a number in {s:?}")))
        })
        .collect()
}

pub fn rho0m(g: &GlobalArgs, lists: &[String], paths: &[PathBuf]) -> Result<(), CliError> {
    let mut all = Vec::new();
    for s in lists {
        all.push(DistortionConstraints::new(parse_list(s)?).map_err(from_core)?);
    }
    for p in paths {
        all.push(instance::load(p)?.e);
    }
    if all.is_empty() {
        return Err(CliError::Input("give at least one --e list or instance file".into()));
    }
    let mut csv = Csv::new(&[
        "n",
        "e2",
        "e3bar",
        "rho0m",
        "lower_concise",
        "lower_sharp",
        "upper_concise",
        "upper_sharp",
    ]);
    for e in &all {
        let r = rho0_max(e).map_err(from_core)?;
        let s = e.sorted();
        let e3bar = s[2..].iter().sum::<f64>() / (s.len() - 2) as f64;
        csv.row(vec![
            e.len().into(),
            s[1].into(),
            e3bar.into(),
            r.rho0_m.into(),
            r.lower_concise.into(),
            r.lower_sharp.into(),
            r.upper_concise.into(),
            r.upper_sharp.into(),
        ]);
    }
    emit(g, "rho0m.csv", &csv)
}

fn emit(g: &GlobalArgs, name: &str, csv: &Csv) -> Result<(), CliError> {
    match &g.out {
        Some(dir) => {
            let path = write_file(dir, name, csv.as_str())?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", csv.as_str()),
    }
    Ok(())
}

pub fn estimate(
    method: McMethod,
    n: usize,
    rho0: f64,
    rho1: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, CliError> {
    match method {
        McMethod::Plain => sdc_probability_mc(n, rho0, rho1, trials, seed),
        McMethod::Cmc => sdc_probability_cmc(n, rho0, rho1, trials, seed),
    }
    .map_err(from_core)
}

pub fn mc_sdc(
    g: &GlobalArgs,
    n_list: &[usize],
    rho0: f64,
    rho1: f64,
    trials: u64,
    method: McMethod,
) -> Result<(), CliError> {
    let mut csv = Csv::new(&["n", "p_hat", "ci", "method"]);
    let mut points = Vec::new();
    for &n in n_list {
        let est = estimate(method, n, rho0, rho1, trials, g.seed)?;
        csv.row(vec![
            n.into(),
            est.p_hat.into(),
            est.ci95_half_width.into(),
            est.method.to_string().into(),
        ]);
        points.push((n, est.p_hat));
    }
    let fit_points: Vec<(usize, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
    let summary = match decay_rate_fit(&fit_points) {
        Ok((slope, intercept)) => {
            let reference = (1.0 - rho0).ln();
            format!(
                "fit slope={} intercept={} ln(1-rho0)={} ratio={}",
                num(slope),
                num(intercept),
                num(reference),
                num(slope / reference)
            )
        }
        Err(err) => format!("fit unavailable: {err}"),
    };
    emit(g, "mc_sdc.csv", &csv)?;
    if g.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}
