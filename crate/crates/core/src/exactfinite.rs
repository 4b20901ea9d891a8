//! Exact finite-size partition functions over magnetisation sectors.
//!
//! With `S_a` the spin sum of party `a` and `N` the total size, the energy is
//! `H = -(1/N) sum_{a<b} S_a S_b - sum_a h_a S_a`. Summing the product law of
//! each `S_a` against `exp(-beta H)` gives `Z_N` exactly, in `O(prod N_a)`
//! work instead of `O(2^N)`. Everything stays in the log domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::critical_beta;
use crate::error::{Error, Result};
use crate::genferro::{gf_critical_beta, lattice_sum_log_probs, EnergyFunction};
use crate::model::ModelSpec;
use crate::numeric::{log_factorials, log_sum_exp};
use crate::spins::SpinFamily;

/// Largest number of joint sectors a single sum may visit.
pub const SIZE_GUARD: u128 = 100_000_000;

/// Law of the magnetisation of `n` i.i.d. spins.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorTable {
    pub n: usize,
    /// Spin sums `S` of the reachable sectors, ascending.
    pub sums: Vec<f64>,
    /// `log P(sum = S)`.
    pub log_probs: Vec<f64>,
}

impl SectorTable {
    pub fn new(family: &SpinFamily, n: usize) -> Result<Self> {
        if let SpinFamily::Rademacher = family {
            let lf = log_factorials(n);
            let base = n as f64 * std::f64::consts::LN_2;
            let sums = (0..=n).map(|k| (2 * k) as f64 - n as f64).collect();
            let mut log_probs: Vec<f64> = (0..=n).map(|k| lf[n] - lf[k] - lf[n - k] - base).collect();
            // summed log-factorials drift at large n
            let drift = log_sum_exp(&log_probs);
            log_probs.iter_mut().for_each(|l| *l -= drift);
            return Ok(SectorTable { n, sums, log_probs });
        }
        let (step, atoms) = family.lattice().ok_or_else(|| {
            Error::OutOfScope(format!("{} is not a lattice law and cannot be enumerated", family.name()))
        })?;
        let (base, logs) = lattice_sum_log_probs(&atoms, n);
        let (sums, log_probs) = logs
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > f64::NEG_INFINITY)
            .map(|(j, l)| (step * (base + j as i64) as f64, *l))
            .unzip();
        Ok(SectorTable { n, sums, log_probs })
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// `log sum_S P(S)`; zero up to rounding.
    pub fn log_total(&self) -> f64 {
        log_sum_exp(&self.log_probs)
    }
}

fn table_size(family: &SpinFamily, n: usize) -> u128 {
    match family {
        SpinFamily::Rademacher => n as u128 + 1,
        _ => match family.lattice() {
            Some((_, atoms)) => {
                let lo = atoms.iter().map(|a| a.0).min().unwrap_or(0);
                let hi = atoms.iter().map(|a| a.0).max().unwrap_or(0);
                n as u128 * (hi - lo) as u128 + 1
            }
            None => 0,
        },
    }
}

fn check_sizes(spec: &ModelSpec, n: &[usize]) -> Result<f64> {
    spec.validate()?;
    if n.len() != spec.nu {
        return Err(Error::DimensionMismatch {
            expected: spec.nu,
            got: n.len(),
        });
    }
    if spec.nu > 3 {
        return Err(Error::SizeGuard {
            needed: u128::MAX,
            guard: SIZE_GUARD,
        });
    }
    if n.contains(&0) {
        return Err(Error::InvalidModel("every party needs at least one spin".into()));
    }
    let total: usize = n.iter().sum();
    let tf = total as f64;
    for (a, &na) in n.iter().enumerate() {
        if (na as f64 / tf - spec.alpha[a]).abs() > 1.0 / tf + 1e-12 {
            return Err(Error::InvalidModel(format!(
                "party {a} has {na} of {total} spins, alpha = {}",
                spec.alpha[a]
            )));
        }
        if let SpinFamily::Uniform = spec.families[a] {
            return Err(Error::OutOfScope("the uniform law is excluded from exact enumeration".into()));
        }
    }
    Ok(tf)
}

/// Party sizes closest to `alpha * n_total`, summing to `n_total`.
pub fn party_sizes(alpha: &[f64], n_total: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = alpha.iter().map(|a| (a * n_total as f64).round() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let last = sizes.len() - 1;
    sizes[last] = (sizes[last] + n_total).saturating_sub(assigned);
    sizes
}

fn exponent2(beta: f64, h: &[f64], inv_n: f64, s1: f64, s2: f64) -> f64 {
    beta * (s1 * s2 * inv_n + h[0] * s1 + h[1] * s2)
}

/// `A_N = (1/N) log E[exp(-beta H)]` under the product spin law.
///
/// ```
/// use multiferro::exactfinite::exact_log_z;
/// use multiferro::ModelSpec;
/// let spec = ModelSpec::rademacher(&[0.5, 0.5], 2.0).unwrap();
/// let a = exact_log_z(&spec, &[1, 1]).unwrap();
/// assert!((a - 0.5 * 1f64.cosh().ln()).abs() < 1e-15);
/// ```
pub fn exact_log_z(spec: &ModelSpec, n: &[usize]) -> Result<f64> {
    let total = check_sizes(spec, n)?;
    let inv_n = 1.0 / total;
    let tables: Vec<SectorTable> = spec
        .families
        .iter()
        .zip(n)
        .map(|(f, &na)| SectorTable::new(f, na))
        .collect::<Result<_>>()?;
    let needed = tables[0].len() as u128 * tables[1].len() as u128;
    if needed > SIZE_GUARD {
        return Err(Error::SizeGuard {
            needed,
            guard: SIZE_GUARD,
        });
    }
    let beta = spec.beta;
    let rows: Vec<f64> = if spec.nu == 2 {
        let (t1, t2) = (&tables[0], &tables[1]);
        (0..t1.len())
            .into_par_iter()
            .map(|i| {
                let s1 = t1.sums[i];
                let terms: Vec<f64> = (0..t2.len())
                    .map(|j| t1.log_probs[i] + t2.log_probs[j] + exponent2(beta, &spec.h, inv_n, s1, t2.sums[j]))
                    .collect();
                log_sum_exp(&terms)
            })
            .collect()
    } else {
        // party 3 summed in closed form: it only sees (S1 + S2) / N + h3
        let (t1, t2) = (&tables[0], &tables[1]);
        let (f3, n3) = (&spec.families[2], n[2] as f64);
        (0..t1.len())
            .into_par_iter()
            .map(|i| {
                let s1 = t1.sums[i];
                let terms: Vec<f64> = (0..t2.len())
                    .map(|j| {
                        let s2 = t2.sums[j];
                        t1.log_probs[i]
                            + t2.log_probs[j]
                            + exponent2(beta, &spec.h, inv_n, s1, s2)
                            + n3 * f3.phi(beta * ((s1 + s2) * inv_n + spec.h[2]))
                    })
                    .collect();
                log_sum_exp(&terms)
            })
            .collect()
    };
    Ok(log_sum_exp(&rows) * inv_n)
}

/// `A_N` for two parties with party 2 summed in closed form,
/// `sum_{S1} P(S1) exp(beta h1 S1 + N2 phi_2(beta (S1 / N + h2)))`.
pub fn exact_log_z_marginal(spec: &ModelSpec, n: &[usize]) -> Result<f64> {
    let total = check_sizes(spec, n)?;
    if spec.nu != 2 {
        return Err(Error::NotBipartite(spec.nu));
    }
    let t1 = SectorTable::new(&spec.families[0], n[0])?;
    let (f2, n2) = (&spec.families[1], n[1] as f64);
    let b = spec.beta;
    let terms: Vec<f64> = (0..t1.len())
        .map(|i| {
            let s1 = t1.sums[i];
            t1.log_probs[i] + b * spec.h[0] * s1 + n2 * f2.phi(b * (s1 / total + spec.h[1]))
        })
        .collect();
    Ok(log_sum_exp(&terms) / total)
}

/// Gibbs expectations `<prod_a m_a^{p_a}>` for each power vector.
pub fn exact_moments(spec: &ModelSpec, n: &[usize], powers: &[Vec<u32>]) -> Result<Vec<f64>> {
    let total = check_sizes(spec, n)?;
    for p in powers {
        if p.len() != spec.nu {
            return Err(Error::DimensionMismatch {
                expected: spec.nu,
                got: p.len(),
            });
        }
    }
    let needed: u128 = spec.families.iter().zip(n).map(|(f, &na)| table_size(f, na)).product();
    if needed > SIZE_GUARD {
        return Err(Error::SizeGuard {
            needed,
            guard: SIZE_GUARD,
        });
    }
    let tables: Vec<SectorTable> = spec
        .families
        .iter()
        .zip(n)
        .map(|(f, &na)| SectorTable::new(f, na))
        .collect::<Result<_>>()?;
    let inv_n = 1.0 / total;
    let beta = spec.beta;
    let k = powers.len();
    let monomial = |ms: &[f64], p: &[u32]| ms.iter().zip(p).map(|(m, e)| m.powi(*e as i32)).product::<f64>();

    // each row: (log weight max, weighted sums of every monomial and of one)
    let rows: Vec<(f64, Vec<f64>)> = (0..tables[0].len())
        .into_par_iter()
        .map(|i| {
            let s1 = tables[0].sums[i];
            let mut cells: Vec<(f64, [f64; 3])> = Vec::new();
            for j in 0..tables[1].len() {
                let s2 = tables[1].sums[j];
                let base = tables[0].log_probs[i] + tables[1].log_probs[j];
                if spec.nu == 2 {
                    let e = base + exponent2(beta, &spec.h, inv_n, s1, s2);
                    cells.push((e, [s1, s2, 0.0]));
                } else {
                    for l in 0..tables[2].len() {
                        let s3 = tables[2].sums[l];
                        let e = base
                            + tables[2].log_probs[l]
                            + beta * ((s1 * s2 + s1 * s3 + s2 * s3) * inv_n + spec.h[0] * s1 + spec.h[1] * s2 + spec.h[2] * s3);
                        cells.push((e, [s1, s2, s3]));
                    }
                }
            }
            let max = cells.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
            let mut acc = vec![0.0; k + 1];
            for (e, s) in &cells {
                let w = (e - max).exp();
                let ms: Vec<f64> = (0..spec.nu).map(|a| s[a] / n[a] as f64).collect();
                acc[k] += w;
                for (slot, p) in acc.iter_mut().zip(powers) {
                    *slot += w * monomial(&ms, p);
                }
            }
            (max, acc)
        })
        .collect();
    let global = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let mut sums = vec![0.0; k + 1];
    for (max, acc) in &rows {
        let scale = (max - global).exp();
        for (s, a) in sums.iter_mut().zip(acc) {
            *s += scale * a;
        }
    }
    let z = sums[k];
    Ok(sums[..k].iter().map(|s| s / z).collect())
}

/// Moments `E[(sum_a c_a m_a)^p]` for `p = 2, 4` from the monomial expansion.
fn projection_moments(spec: &ModelSpec, n: &[usize], dirs: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    let nu = spec.nu;
    let mut powers: Vec<Vec<u32>> = Vec::new();
    for deg in [2u32, 4] {
        compositions(nu, deg, &mut Vec::new(), &mut powers);
    }
    let vals = exact_moments(spec, n, &powers)?;
    let lf = log_factorials(4);
    Ok(dirs
        .iter()
        .map(|c| {
            let mut out = [0.0; 2];
            for (p, v) in powers.iter().zip(&vals) {
                let deg: u32 = p.iter().sum();
                let multinom = (lf[deg as usize] - p.iter().map(|e| lf[*e as usize]).sum::<f64>()).exp().round();
                let coef: f64 = c.iter().zip(p).map(|(x, e)| x.powi(*e as i32)).product();
                out[if deg == 2 { 0 } else { 1 }] += multinom * coef * v;
            }
            out
        })
        .collect())
}

fn compositions(parts: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == parts {
        let mut p = prefix.clone();
        p.push(total);
        out.push(p);
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        compositions(parts, total - k, prefix, out);
        prefix.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n: Vec<usize>,
    pub beta: f64,
    /// `Cov(sqrt(N_a) m_a, sqrt(N_b) m_b)`.
    pub empirical: Vec<Vec<f64>>,
    pub predicted: Vec<Vec<f64>>,
    /// Largest entrywise relative deviation.
    pub max_rel_deviation: f64,
}

/// Predicted covariance of `sqrt(N_a) m_a` below `beta_c` for two parties.
pub fn predicted_covariance(spec: &ModelSpec) -> Result<Vec<Vec<f64>>> {
    let bc = critical_beta(spec)?.beta_c;
    let b = spec.beta;
    if b >= bc {
        return Err(Error::Precondition(format!("beta = {b} is not below beta_c = {bc}")));
    }
    let d = bc * bc - b * b;
    Ok(vec![vec![bc * bc / d, b * bc / d], vec![b * bc / d, bc * bc / d]])
}

pub fn fluct_covariance(spec: &ModelSpec, n: &[usize]) -> Result<CovarianceReport> {
    if spec.nu != 2 {
        return Err(Error::NotBipartite(spec.nu));
    }
    if !spec.zero_field() {
        return Err(Error::Precondition("fluctuation check needs zero field".into()));
    }
    let predicted = predicted_covariance(spec)?;
    let powers = vec![vec![2, 0], vec![1, 1], vec![0, 2], vec![1, 0], vec![0, 1]];
    let v = exact_moments(spec, n, &powers)?;
    let (n1, n2) = (n[0] as f64, n[1] as f64);
    let c11 = n1 * (v[0] - v[3] * v[3]);
    let c12 = (n1 * n2).sqrt() * (v[1] - v[3] * v[4]);
    let c22 = n2 * (v[2] - v[4] * v[4]);
    let empirical = vec![vec![c11, c12], vec![c12, c22]];
    let mut dev: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            dev = dev.max((empirical[a][b] - predicted[a][b]).abs() / predicted[a][b].abs());
        }
    }
    Ok(CovarianceReport {
        n: n.to_vec(),
        beta: spec.beta,
        empirical,
        predicted,
        max_rel_deviation: dev,
    })
}

/// `E[v^4] / E[v^2]^2` under the density proportional to `exp(c v^4)`, `c < 0`,
/// by double-exponential quadrature.
pub fn quartic_kurtosis_ratio(c: f64) -> Result<f64> {
    if !(c < 0.0) {
        return Err(Error::Precondition(format!("quartic coefficient {c} must be negative")));
    }
    // the mass beyond exp(c L^4) = 1e-40 is negligible
    let l = (92.0 / -c).powf(0.25);
    let moment = |k: i32| quadrature::double_exponential::integrate(|v| v.powi(k) * (c * v.powi(4)).exp(), 0.0, l, 1e-14).integral;
    let (m0, m2, m4) = (moment(0), moment(2), moment(4));
    Ok(m4 * m0 / (m2 * m2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalFluctuationReport {
    pub n: Vec<usize>,
    pub beta: f64,
    pub kernel: Vec<f64>,
    /// `E[z^4] / E[z^2]^2` for `z = N^{1/4} (m . w)`.
    pub kurtosis_ratio: f64,
    pub predicted_ratio: f64,
    /// `Var(N^{1/4} m . w_perp)`.
    pub perp_variance_quarter: f64,
    /// `Var(N^{1/2} m . w)`.
    pub parallel_variance_sqrt: f64,
}

/// Fluctuations at `beta_c`, `N` the total size.
pub fn critical_fluct_stats(spec: &ModelSpec, n: &[usize]) -> Result<CriticalFluctuationReport> {
    if spec.nu != 2 {
        return Err(Error::NotBipartite(spec.nu));
    }
    let report = critical_beta(spec)?;
    if (spec.beta - report.beta_c).abs() > 1e-12 * report.beta_c {
        return Err(Error::Precondition(format!(
            "critical fluctuations need beta = beta_c = {}, got {}",
            report.beta_c, spec.beta
        )));
    }
    if !spec.zero_field() {
        return Err(Error::Precondition("fluctuation check needs zero field".into()));
    }
    let w = report.kernel.clone();
    let perp = vec![-w[1], w[0]];
    let mom = projection_moments(spec, n, &[w.clone(), perp])?;
    let total: f64 = n.iter().sum::<usize>() as f64;
    let a = spec.alpha[0];
    let p4: Vec<f64> = spec.families.iter().map(|f| f.cumulant(4)).collect::<Result<_>>()?;
    let quartic = (a * p4[0] * w[0].powi(4) + (1.0 - a) * p4[1] * w[1].powi(4)) / 24.0;
    Ok(CriticalFluctuationReport {
        n: n.to_vec(),
        beta: spec.beta,
        kernel: w,
        kurtosis_ratio: mom[0][1] / (mom[0][0] * mom[0][0]),
        predicted_ratio: quartic_kurtosis_ratio(quartic)?,
        perp_variance_quarter: total.sqrt() * mom[1][0],
        parallel_variance_sqrt: total * mom[0][0],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfFluctuationReport {
    pub n: usize,
    pub beta: f64,
    /// `Var(sqrt(N) m)`.
    pub variance: f64,
    pub predicted_variance: Option<f64>,
    /// `E[m^4] / E[m^2]^2`.
    pub kurtosis_ratio: f64,
    pub predicted_ratio: Option<f64>,
}

/// Exact fluctuations of the one-party model `-N u(m)` against the Gaussian
/// prediction below `beta_c` and the quartic density at `beta_c`.
pub fn gf_fluct_check(u: &EnergyFunction, family: &SpinFamily, beta: f64, n: usize) -> Result<GfFluctuationReport> {
    if !u.is_symmetric() {
        return Err(Error::Precondition("energy must be symmetric".into()));
    }
    if let SpinFamily::Uniform = family {
        return Err(Error::OutOfScope("the uniform law is excluded from exact enumeration".into()));
    }
    let needed = table_size(family, n);
    if needed > SIZE_GUARD {
        return Err(Error::SizeGuard {
            needed,
            guard: SIZE_GUARD,
        });
    }
    let table = SectorTable::new(family, n)?;
    let nf = n as f64;
    let logs: Vec<f64> = table
        .sums
        .iter()
        .zip(&table.log_probs)
        .map(|(s, l)| l + nf * beta * u.value(s / nf))
        .collect();
    let lz = log_sum_exp(&logs);
    let (mut m2, mut m4) = (0.0, 0.0);
    for (s, l) in table.sums.iter().zip(&logs) {
        let w = (l - lz).exp();
        let m = s / nf;
        m2 += w * m * m;
        m4 += w * m.powi(4);
    }
    let bc = gf_critical_beta(u)?;
    let (predicted_variance, predicted_ratio) = if beta < bc {
        (Some(1.0 / (1.0 - beta * u.second(0.0))), None)
    } else if (beta - bc).abs() <= 1e-12 * bc {
        let p4 = family.cumulant(4)? + crate::genferro::quartic_cumulant_u(u, beta);
        (None, Some(quartic_kurtosis_ratio(p4 / 24.0)?))
    } else {
        (None, None)
    };
    Ok(GfFluctuationReport {
        n,
        beta,
        variance: nf * m2,
        predicted_variance,
        kurtosis_ratio: m4 / (m2 * m2),
        predicted_ratio,
    })
}

/// One line of the fluctuation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctRow {
    pub n: usize,
    pub beta: f64,
    pub observable: String,
    pub empirical: f64,
    pub predicted: f64,
    pub deviation: f64,
}

impl FluctRow {
    pub fn new(n: usize, beta: f64, observable: &str, empirical: f64, predicted: f64) -> Self {
        FluctRow {
            n,
            beta,
            observable: observable.to_string(),
            empirical,
            predicted,
            // absolute deviation when the prediction is zero
            deviation: if predicted == 0.0 {
                empirical.abs()
            } else {
                (empirical - predicted).abs() / predicted.abs()
            },
        }
    }
}
