use std::path::Path;

use multiferro::bipartite::{
    critical_fields, critical_lines, first_order_jump, landscape_scan, line_intersections, marginal_optimum,
    marginal_pressure_derivatives, phase_rows, LANDSCAPE_POINTS,
};
use multiferro::criticality::critical_beta;
use multiferro::exactfinite::{critical_fluct_stats, fluct_covariance, gf_fluct_check, party_sizes, FluctRow};
use multiferro::genferro::EnergyFunction;
use multiferro::solver::{entropic_pressure, equilibrium, pressure_variational, solve_self_consistency, StartGrid};
use multiferro::verification::{run_criterion, VerifyReport, NAMES};
use multiferro::{Error, ModelSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{out_path, short, write_json, Cell, Table};

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn label<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn beta_c(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let hash = cfg.hash("beta-c");
    let report = critical_beta(cfg.spec())?;
    println!("{}", short(report.beta_c));
    write_json(&out_path(out, "beta_c.json")?, &report)?;
    if let Some(n) = cfg.surface_points {
        if n < 2 {
            return Err(CliError::Config("surface_points must be at least 2".into()));
        }
        let mut cells = Vec::new();
        for i in 1..n {
            for j in 1..n - i {
                cells.push((i as f64 / n as f64, j as f64 / n as f64));
            }
        }
        let values: Vec<Result<f64, Error>> = cells
            .par_iter()
            .map(|&(a1, a2)| {
                let spec = ModelSpec::rademacher(&[a1, a2, 1.0 - a1 - a2], 1.0)?;
                Ok(critical_beta(&spec)?.beta_c)
            })
            .collect();
        let mut t = Table::new(&hash, &["alpha1", "alpha2", "alpha3", "beta_c"]);
        for ((a1, a2), v) in cells.iter().zip(values) {
            t.row(&[(*a1).into(), (*a2).into(), (1.0 - a1 - a2).into(), v?.into()]);
        }
        t.write(&out_path(out, "beta_c_surface.csv")?)?;
    }
    Ok(())
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.spec();
    let grid = StartGrid {
        per_axis: cfg.per_axis.unwrap_or(3),
        kernel_seeds: true,
    };
    grid.validate()?;
    let points = solve_self_consistency(spec, &grid)?;
    let mut header: Vec<String> = (1..=spec.nu).map(|a| format!("m{a}")).collect();
    header.extend(["pressure", "stability", "residual"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&cfg.hash("solve"), &header);
    for p in &points {
        let mut row: Vec<Cell> = p.m.iter().map(|&x| x.into()).collect();
        row.push(p.pressure.into());
        row.push(label(&p.stability).into());
        row.push(p.residual.into());
        t.row(&row);
    }
    t.write(&out_path(out, "stationary.csv")?)?;
    for p in &points {
        let m: Vec<String> = p.m.iter().map(|x| format!("{:.10}", x + 0.0)).collect();
        println!("{:<11} pressure {:.12}  m = ({})", label(&p.stability), p.pressure, m.join(", "));
    }
    Ok(())
}

#[derive(Serialize)]
struct VariationalSummary {
    pressure: f64,
    c: f64,
    m_prime: Vec<f64>,
    m: Vec<f64>,
    gradient_norm: f64,
    dual_value: f64,
}

#[derive(Serialize)]
struct PressureSummary {
    beta: f64,
    pressure: f64,
    m: Vec<f64>,
    energy_entropy: f64,
    entropic: f64,
    marginal: Option<f64>,
    variational: VariationalSummary,
    tol: f64,
    agree: bool,
}

pub fn pressure(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.spec();
    let eq = equilibrium(spec)?;
    let entropic = entropic_pressure(spec)?;
    let marginal = if spec.nu == 2 { Some(marginal_optimum(spec)?.1) } else { None };
    let c = cfg.c.unwrap_or(spec.nu as f64);
    let starts = cfg.starts.unwrap_or((1 << spec.nu.min(10)) + 1);
    let v = pressure_variational(spec, c, starts)?;
    let tol = cfg.tol.unwrap_or(1e-8);
    let agree = [Some(entropic), marginal, Some(v.pressure)]
        .iter()
        .flatten()
        .all(|x| (x - eq.pressure).abs() <= tol);
    let summary = PressureSummary {
        beta: spec.beta,
        pressure: eq.pressure,
        m: eq.m.0.clone(),
        energy_entropy: eq.pressure,
        entropic,
        marginal,
        variational: VariationalSummary {
            pressure: v.pressure,
            c: v.c,
            m_prime: v.m_prime,
            m: v.m.0,
            gradient_norm: v.gradient_norm,
            dual_value: v.dual_value,
        },
        tol,
        agree,
    };
    let text = write_json(&out_path(out, "pressure.json")?, &summary)?;
    print!("{text}");
    Ok(())
}

fn require_bipartite(spec: &ModelSpec) -> Result<(), CliError> {
    if spec.nu != 2 {
        return Err(CliError::Config(format!("command needs nu = 2, model has nu = {}", spec.nu)));
    }
    Ok(())
}

pub fn phase_diagram(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.spec();
    require_bipartite(spec)?;
    let hash = cfg.hash("phase-diagram");
    let h2_max = cfg.h2_max.unwrap_or(1.0);
    let grid = linspace(-h2_max, h2_max, cfg.h2_points.unwrap_or(201));
    let points = cfg.profile_points.unwrap_or(LANDSCAPE_POINTS);

    let lines = critical_lines(spec, &grid)?;
    let mut t = Table::new(&hash, &["h2", "h1_line1", "h1_line2", "residual1", "residual2"]);
    for p in &lines {
        t.row(&[p.h2.into(), p.h1_line1.into(), p.h1_line2.into(), p.residual1.into(), p.residual2.into()]);
    }
    t.write(&out_path(out, "critical_lines.csv")?)?;

    let rows: Vec<Result<_, Error>> = grid.par_iter().map(|&h2| phase_rows(spec, &[h2], points)).collect();
    let mut t = Table::new(&hash, &["h2", "h1", "m1_global", "m2_global", "regime", "a1_global", "stationary_points"]);
    for r in rows {
        for r in r? {
            t.row(&[
                r.h2.into(),
                r.h1.into(),
                r.m1_global.into(),
                r.m2_global.into(),
                r.regime.to_string().into(),
                r.a1_global.into(),
                r.stationary.len().into(),
            ]);
        }
    }
    t.write(&out_path(out, "regimes.csv")?)?;

    let range = cfg.intersection_range.unwrap_or(2.0 * h2_max);
    let hits = line_intersections(spec, range, cfg.intersection_grid.unwrap_or(400))?;
    let mut t = Table::new(&hash, &["h1", "h2"]);
    for (h1, h2) in &hits {
        t.row(&[(*h1).into(), (*h2).into()]);
    }
    t.write(&out_path(out, "intersections.csv")?)?;
    println!("critical lines intersect at {} point(s):", hits.len());
    for (h1, h2) in &hits {
        println!("  h1 = {:.9}, h2 = {:.9}", h1 + 0.0, h2 + 0.0);
    }
    Ok(())
}

pub fn landscape(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.spec();
    require_bipartite(spec)?;
    let hash = cfg.hash("landscape");
    let values = cfg.h2_values.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75]);
    let n = cfg.profile_points.unwrap_or(401);
    let hull = spec.families[0].hull();
    let ms = linspace(-hull, hull, n);
    let mut profile = Table::new(&hash, &["h2", "h1", "m1", "a1", "a1_prime", "a1_second"]);
    let mut stat = Table::new(&hash, &["h2", "h1", "m1", "a1", "a1_second", "label", "regime"]);
    for &h2 in &values {
        let r = landscape_scan(spec, h2, LANDSCAPE_POINTS)?;
        let at = spec.with_h(&[r.h1, h2]);
        let rows: Vec<Result<[f64; 3], Error>> = ms.par_iter().map(|&m| marginal_pressure_derivatives(&at, m)).collect();
        for (m, d) in ms.iter().zip(rows) {
            let d = d?;
            profile.row(&[h2.into(), r.h1.into(), (*m).into(), d[0].into(), d[1].into(), d[2].into()]);
        }
        for p in &r.points {
            stat.row(&[
                h2.into(),
                r.h1.into(),
                p.m1.into(),
                p.a1.into(),
                p.a1_second.into(),
                label(&p.label).into(),
                r.regime.to_string().into(),
            ]);
        }
        println!("h2 = {h2}: {}, local minima {}, global M1 = {:.10}", r.regime, r.local_minima(), r.global_m1 + 0.0);
    }
    profile.write(&out_path(out, "landscape.csv")?)?;
    stat.write(&out_path(out, "landscape_stationary.csv")?)?;
    Ok(())
}

#[derive(Serialize)]
struct FieldsSummary {
    beta: f64,
    fields: multiferro::bipartite::CriticalFields,
    jump: Option<multiferro::bipartite::JumpRecord>,
}

pub fn fields(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.spec();
    require_bipartite(spec)?;
    let summary = FieldsSummary {
        beta: spec.beta,
        fields: critical_fields(spec)?,
        jump: first_order_jump(spec)?,
    };
    let text = write_json(&out_path(out, "critical_fields.json")?, &summary)?;
    print!("{text}");
    Ok(())
}

pub fn fluctuations(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.spec();
    require_bipartite(spec)?;
    if !spec.zero_field() {
        return Err(CliError::Config("fluctuation suite needs zero field".into()));
    }
    let bc = critical_beta(spec)?.beta_c;
    let sub = spec.with_beta(0.5 * bc);
    let crit = spec.with_beta(bc);
    let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![200, 400, 800, 1600]);
    let mut rows: Vec<FluctRow> = Vec::new();
    for &n in &sizes {
        let parts = party_sizes(&spec.alpha, n);
        let cov = fluct_covariance(&sub, &parts)?;
        for (name, (a, b)) in [("cov11", (0, 0)), ("cov12", (0, 1)), ("cov22", (1, 1))] {
            rows.push(FluctRow::new(n, sub.beta, name, cov.empirical[a][b], cov.predicted[a][b]));
        }
        let c = critical_fluct_stats(&crit, &parts)?;
        rows.push(FluctRow::new(n, crit.beta, "kurtosis_w", c.kurtosis_ratio, c.predicted_ratio));
        rows.push(FluctRow::new(n, crit.beta, "var_quarter_w_perp", c.perp_variance_quarter, 0.0));
        let g = gf_fluct_check(&EnergyFunction::quadratic(), &spec.families[0], 0.5, n)?;
        rows.push(FluctRow::new(n, 0.5, "gf_variance", g.variance, g.predicted_variance.unwrap_or(f64::NAN)));
    }
    let mut t = Table::new(&cfg.hash("fluctuations"), &["N", "beta", "observable", "empirical", "predicted", "deviation"]);
    for r in &rows {
        t.row(&[
            r.n.into(),
            r.beta.into(),
            r.observable.as_str().into(),
            r.empirical.into(),
            r.predicted.into(),
            r.deviation.into(),
        ]);
        println!("N = {:>5} {:<20} {:.6} vs {:.6}", r.n, r.observable, r.empirical, r.predicted);
    }
    t.write(&out_path(out, "fluctuations.csv")?)?;
    Ok(())
}

pub fn verify(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let ids = cfg.criteria.clone().unwrap_or_else(|| (1..=NAMES.len() as u8).collect());
    if let Some(bad) = ids.iter().find(|&&k| k == 0 || k as usize > NAMES.len()) {
        return Err(CliError::Config(format!("no criterion {bad}")));
    }
    let mut results = Vec::new();
    for &id in &ids {
        let r = run_criterion(id);
        println!("{}", r.line());
        results.push(r);
    }
    let report = VerifyReport { results };
    let summary = report.summary();
    println!("{}", summary.lines().last().unwrap_or_default());
    std::fs::write(out_path(out, "verify.txt")?, &summary)?;
    let failed = report.results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Verification(failed, report.results.len()));
    }
    Ok(())
}
