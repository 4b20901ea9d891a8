//! The acceptance battery: ten numbered checks with pinned tolerances.
//!
//! Every check is deterministic. Random inputs come from a fixed-seed
//! ChaCha stream and all parallel reductions run in a fixed order, so the
//! report text does not depend on the number of worker threads.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{
    critical_fields, critical_line_1, first_order_jump, landscape_scan, line_intersections, marginal_optimum, Regime,
    LANDSCAPE_POINTS,
};
use crate::criticality::{critical_beta, scaling_fit};
use crate::error::Result;
use crate::exactfinite::{critical_fluct_stats, exact_log_z, fluct_covariance, gf_fluct_check, party_sizes};
use crate::genferro::{conjugate_measure, gf_critical_beta, laplace_residual, quartic_cumulant_u, EnergyFunction};
use crate::bipartite::dual_energy;
use crate::model::{interaction_matrices, ModelSpec};
use crate::solver::{entropic_pressure, equilibrium, pressure_variational};
use crate::spins::SpinFamily;

const SEED: u64 = 0x6d75_6c74_6966_6572;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{:>2} {} {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub results: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&r.line());
            out.push('\n');
        }
        let passed = self.results.iter().filter(|r| r.passed).count();
        out.push_str(&format!("{passed}/{} criteria passed\n", self.results.len()));
        out
    }
}

fn result(id: u8, name: &str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
    }
}

fn failed(id: u8, name: &str, err: crate::Error) -> CriterionResult {
    result(id, name, false, format!("error: {err}"))
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

fn rad(alpha: &[f64], beta: f64) -> ModelSpec {
    ModelSpec::rademacher(alpha, beta).expect("valid fractions")
}

pub const NAMES: [&str; 10] = [
    "critical temperatures",
    "interaction decomposition",
    "pressure equivalences",
    "pitchfork scaling",
    "subcritical fluctuations",
    "critical fluctuations",
    "generalised ferromagnet",
    "phase diagram above beta_c",
    "phase diagram below beta_c",
    "thread-count determinism",
];

/// Runs one criterion, `1..=10`.
pub fn run_criterion(id: u8) -> CriterionResult {
    let name = NAMES.get(id as usize - 1).copied().unwrap_or("unknown");
    let out = match id {
        1 => critical_temperatures(),
        2 => decomposition(),
        3 => pressure_equivalences(),
        4 => pitchfork(),
        5 => subcritical(),
        6 => critical(),
        7 => generalised(),
        8 => phase_above(),
        9 => phase_below(),
        10 => determinism(),
        _ => Err(crate::Error::Precondition(format!("no criterion {id}"))),
    };
    match out {
        Ok((passed, detail)) => result(id, name, passed, detail),
        Err(e) => failed(id, name, e),
    }
}

pub fn run_all() -> VerifyReport {
    VerifyReport {
        results: (1..=10).map(run_criterion).collect(),
    }
}

type Outcome = Result<(bool, String)>;

fn critical_temperatures() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a: f64 = rng.random_range(0.02..0.98);
        let r = critical_beta(&rad(&[a, 1.0 - a], 1.0))?;
        worst = worst.max((r.beta_c - 1.0 / (a * (1.0 - a)).sqrt()).abs());
    }
    let tri = critical_beta(&rad(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0))?;
    let tri_err = (tri.beta_c - 1.5).abs();
    let elapsed = start.elapsed();
    let passed = worst < 1e-10 && tri_err < 1e-12 && tri.det_residual < 1e-12 && within(elapsed, 1);
    Ok((
        passed,
        format!(
            "bipartite max error {worst:.3e}; tripartite |beta_c - 1.5| {tri_err:.3e}, det residual {:.3e}",
            tri.det_residual
        ),
    ))
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut worst_p, mut worst_t): (f64, f64) = (0.0, 0.0);
    for k in 0..100 {
        let nu = rng.random_range(2..=5usize);
        let raw: Vec<f64> = (0..nu).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let alpha: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let extra: f64 = rng.random_range(0.0..4.0);
        let c = (nu - 1) as f64 + if k % 10 == 0 { 0.0 } else { extra };
        let dec = interaction_matrices(&rad(&alpha, 1.0), c)?;
        let diff = dec.p.transpose() * &dec.p - &dec.jc;
        let norm = diff.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        worst_p = worst_p.max(norm);
        let mut expected = vec![c + 1.0; nu];
        expected[0] = c + 1.0 - nu as f64;
        for (e, v) in expected.iter().zip(&dec.tc_eigenvalues) {
            worst_t = worst_t.max((e - v).abs());
        }
    }
    Ok((
        worst_p < 1e-12 && worst_t < 1e-10,
        format!("max |P^T P - Jc| {worst_p:.3e}; max spectrum error {worst_t:.3e}"),
    ))
}

struct EquivalenceSample {
    variational: f64,
    energy_entropy: f64,
    entropic: f64,
    marginal: Option<f64>,
    c_gap: f64,
    finite: f64,
    monotone: bool,
}

fn equivalence_sample(spec: &ModelSpec) -> Result<EquivalenceSample> {
    let nu = spec.nu;
    let starts = (1 << nu) + 1;
    let c1 = (nu - 1) as f64 + 0.5;
    let c2 = nu as f64 + 1.5;
    let v1 = pressure_variational(spec, c1, starts)?.pressure;
    let v2 = pressure_variational(spec, c2, starts)?.pressure;
    let energy_entropy = equilibrium(spec)?.pressure;
    let entropic = entropic_pressure(spec)?;
    let marginal = if nu == 2 { Some(marginal_optimum(spec)?.1) } else { None };
    let mut finite = Vec::new();
    for n in [250, 500, 1000, 2000] {
        finite.push(exact_log_z(spec, &party_sizes(&spec.alpha, n))?);
    }
    let monotone = finite.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(EquivalenceSample {
        variational: v1,
        energy_entropy,
        entropic,
        marginal,
        c_gap: (v1 - v2).abs(),
        finite: finite[3],
        monotone,
    })
}

fn pressure_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let specs: Vec<ModelSpec> = (0..20)
        .map(|k| {
            let alpha: Vec<f64> = if k % 2 == 0 {
                let a = rng.random_range(10..=40u32) as f64 / 50.0;
                vec![a, 1.0 - a]
            } else {
                let a1 = rng.random_range(8..=20u32);
                let a2 = rng.random_range(8..=20u32);
                vec![a1 as f64 / 50.0, a2 as f64 / 50.0, (50 - a1 - a2) as f64 / 50.0]
            };
            let beta = rng.random_range(0.5..3.0);
            let h: Vec<f64> = alpha.iter().map(|_| rng.random_range(-0.3..0.3)).collect();
            rad(&alpha, beta).with_h(&h)
        })
        .collect();
    let samples: Vec<Result<EquivalenceSample>> = specs.par_iter().map(equivalence_sample).collect();
    let (mut d_var, mut d_ent, mut d_marg, mut d_c, mut d_fin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut monotone = true;
    let mut errors = 0;
    for s in samples {
        match s {
            Ok(s) => {
                d_var = d_var.max((s.variational - s.energy_entropy).abs());
                d_ent = d_ent.max((s.entropic - s.energy_entropy).abs());
                if let Some(m) = s.marginal {
                    d_marg = d_marg.max((m - s.energy_entropy).abs());
                }
                d_c = d_c.max(s.c_gap);
                d_fin = d_fin.max((s.finite - s.energy_entropy).abs());
                monotone &= s.monotone;
            }
            Err(_) => errors += 1,
        }
    }
    let passed = errors == 0 && d_var < 1e-8 && d_ent < 1e-8 && d_marg < 1e-8 && d_c < 1e-8 && d_fin < 0.01 && monotone;
    Ok((
        passed,
        format!(
            "variational {d_var:.3e}, entropic {d_ent:.3e}, marginal {d_marg:.3e}, c-dependence {d_c:.3e}, \
             finite N=2000 {d_fin:.3e}, monotone {monotone}, errors {errors}"
        ),
    ))
}

fn pitchfork() -> Outcome {
    let start = Instant::now();
    let equal = scaling_fit(&rad(&[0.5, 0.5], 1.0), (1e-4, 1e-2), 9)?;
    let skew = scaling_fit(&rad(&[0.3, 0.7], 1.0), (1e-4, 1e-2), 9)?;
    let elapsed = start.elapsed();
    let kappa_err = (equal.kappa * 24.0 - 1.0).abs();
    let passed = (equal.exponent - 0.5).abs() < 0.02
        && (skew.exponent - 0.5).abs() < 0.02
        && equal.direction_error < 1e-3
        && skew.direction_error < 1e-3
        && kappa_err < 0.02
        && within(elapsed, 10);
    Ok((
        passed,
        format!(
            "exponents {:.5}, {:.5}; direction errors {:.3e}, {:.3e}; kappa relative error {kappa_err:.3e}",
            equal.exponent, skew.exponent, equal.direction_error, skew.direction_error
        ),
    ))
}

fn subcritical() -> Outcome {
    let spec = rad(&[0.5, 0.5], 1.0);
    let small = fluct_covariance(&spec, &[800, 800])?;
    let large = fluct_covariance(&spec, &[1600, 1600])?;
    let ratio = large.max_rel_deviation / small.max_rel_deviation;
    let passed = small.max_rel_deviation < 0.05 && (0.4..=0.6).contains(&ratio);
    Ok((
        passed,
        format!(
            "N=800 deviation {:.4e}, N=1600 deviation {:.4e}, ratio {ratio:.4}",
            small.max_rel_deviation, large.max_rel_deviation
        ),
    ))
}

fn critical() -> Outcome {
    let spec = rad(&[0.5, 0.5], 2.0);
    let big = critical_fluct_stats(&spec, &[1600, 1600])?;
    let small = critical_fluct_stats(&spec, &[400, 400])?;
    let kurt_err = (big.kurtosis_ratio / big.predicted_ratio - 1.0).abs();
    let growth = big.parallel_variance_sqrt / small.parallel_variance_sqrt;
    let passed = kurt_err < 0.1 && big.perp_variance_quarter < 0.05 && growth > 3.0;
    Ok((
        passed,
        format!(
            "kurtosis {:.5} vs {:.5} (error {kurt_err:.3e}); perpendicular variance {:.4e}; sqrt-scale growth {growth:.4}",
            big.kurtosis_ratio, big.predicted_ratio, big.perp_variance_quarter
        ),
    ))
}

fn generalised() -> Outcome {
    let q = EnergyFunction::quadratic();
    let bc = gf_critical_beta(&q)?;
    let fl = gf_fluct_check(&q, &SpinFamily::Rademacher, 0.5 * bc, 2000)?;
    let predicted = fl.predicted_variance.unwrap_or(f64::NAN);
    let var_err = (fl.variance / predicted - 1.0).abs();
    let duality = EnergyFunction::Duality {
        family: SpinFamily::Rademacher,
    };
    let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
    let mut laplace: f64 = 0.0;
    for beta in [1.0, 2.0, 3.0] {
        let m = conjugate_measure(&duality, beta, 1)?;
        laplace = laplace.max(laplace_residual(&duality, beta, &m, &xs));
    }
    let mut p4_exact = true;
    for a in [0.5, 0.4, 0.25] {
        let spec = rad(&[a, 1.0 - a], 1.0);
        let d = dual_energy(&spec)?;
        let lhs = quartic_cumulant_u(&d.u1, d.beta1);
        let rhs = (1.0 - a) / a * spec.families[1].cumulant(4)?;
        p4_exact &= lhs == rhs;
    }
    let passed = var_err < 0.05 && laplace < 1e-10 && p4_exact;
    Ok((
        passed,
        format!(
            "variance {:.5} vs {predicted:.5} (error {var_err:.3e}); Laplace residual {laplace:.3e}; quartic identity {p4_exact}",
            fl.variance
        ),
    ))
}

fn regime_sequence(spec: &ModelSpec, top: f64, n: usize) -> Result<Vec<Regime>> {
    let grid: Vec<f64> = (1..=n).map(|i| top * i as f64 / n as f64).collect();
    let regimes: Vec<Result<Regime>> = grid
        .par_iter()
        .map(|&h2| landscape_scan(spec, h2, LANDSCAPE_POINTS).map(|r| r.regime))
        .collect();
    let mut seq: Vec<Regime> = Vec::new();
    for r in regimes {
        let r = r?;
        if seq.last() != Some(&r) {
            seq.push(r);
        }
    }
    Ok(seq)
}

fn phase_above() -> Outcome {
    let start = Instant::now();
    let spec = rad(&[0.5, 0.5], 4.0);
    let f = critical_fields(&spec)?;
    let (Some(h1), Some(h2), Some(h3)) = (f.h_c1, f.h_c2, f.h_c3) else {
        return Ok((false, "critical fields missing".into()));
    };
    let ordered = 0.0 < h1 && h1 < h2 && h2 < h3;
    let h1_err = (h1 - 2f64.acosh() / 4.0).abs();
    let jump = first_order_jump(&spec)?;
    let (h2_err, sign_change) = match &jump {
        Some(j) => ((j.h2_crossing - j.h2_lines).abs(), j.m2_before * j.m2_after < 0.0),
        None => (f64::INFINITY, false),
    };
    let seq = regime_sequence(&spec, 1.5 * h3, 400)?;
    let seq_ok = seq == [Regime::R3, Regime::R2, Regime::R1, Regime::R0];
    let elapsed = start.elapsed();
    let names: Vec<String> = seq.iter().map(|r| r.to_string()).collect();
    let passed = ordered && h1_err < 1e-9 && h2_err < 1e-6 && seq_ok && sign_change && within(elapsed, 60);
    Ok((
        passed,
        format!(
            "h_c = ({h1:.9}, {h2:.9}, {h3:.9}); h_c1 error {h1_err:.3e}; h_c2 agreement {h2_err:.3e}; \
             regimes {}; M2 sign change {sign_change}",
            names.join(">")
        ),
    ))
}

fn phase_below() -> Outcome {
    let spec = rad(&[0.5, 0.5], 1.0);
    let hits = line_intersections(&spec, 2.0, 400)?;
    let off_origin = hits.iter().filter(|p| p.0.hypot(p.1) > 1e-6).count();
    let grid: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.02).collect();
    let scans: Vec<Result<(usize, f64)>> = grid
        .par_iter()
        .map(|&h2| landscape_scan(&spec, h2, LANDSCAPE_POINTS).map(|r| (r.local_minima(), r.global_m1)))
        .collect();
    let mut single = true;
    let mut worst_m1: f64 = 0.0;
    for s in scans {
        let (minima, m1) = s?;
        single &= minima == 1;
        worst_m1 = worst_m1.max(m1.abs());
    }
    let origin_line = critical_line_1(&spec, 0.0).abs();
    let passed = !hits.is_empty() && off_origin == 0 && single && worst_m1 < 1e-9 && origin_line < 1e-15;
    Ok((
        passed,
        format!(
            "{} intersections, {off_origin} away from the origin; single minimum on line 1 {single}, max |M1| {worst_m1:.3e}",
            hits.len()
        ),
    ))
}

/// Bit patterns of the parallel computations, for the thread-count check.
fn fingerprint() -> Result<Vec<u64>> {
    let mut bits = Vec::new();
    let bip = rad(&[0.5, 0.5], 1.0);
    bits.push(exact_log_z(&bip.with_h(&[0.05, -0.02]), &[600, 600])?.to_bits());
    let cov = fluct_covariance(&bip, &[400, 400])?;
    bits.extend(cov.empirical.iter().flatten().map(|x| x.to_bits()));
    let crit = critical_fluct_stats(&rad(&[0.5, 0.5], 2.0), &[200, 200])?;
    bits.push(crit.kurtosis_ratio.to_bits());
    let tri = rad(&[0.2, 0.3, 0.5], 1.2).with_h(&[0.1, 0.0, -0.1]);
    bits.push(exact_log_z(&tri, &[100, 150, 250])?.to_bits());
    let seq = regime_sequence(&rad(&[0.5, 0.5], 4.0), 1.0, 24)?;
    bits.extend(seq.iter().map(|r| *r as u64));
    Ok(bits)
}

fn determinism() -> Outcome {
    let mut prints = Vec::new();
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::Precondition(e.to_string()))?;
        prints.push(pool.install(fingerprint)?);
    }
    let same = prints.windows(2).all(|w| w[0] == w[1]);
    Ok((same, format!("{} values compared across 1, 4 and 8 threads, identical {same}", prints[0].len())))
}
