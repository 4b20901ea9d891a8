//! Critical temperature, kernel direction and pitchfork scaling at zero field.
//!
//! Linearising the self-consistency system at `m = 0` gives `(I - M0(beta)) m`
//! with `M0_ab = beta alpha_b` off the diagonal. Its determinant is the
//! polynomial `1 - sum_k beta^k (k - 1) e_k(alpha)`, whose unique positive
//! root is the critical inverse temperature.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numeric::{brent, elementary_symmetric};
use crate::solver::newton_solve;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub beta_c: f64,
    pub kernel: Vec<f64>,
    /// All principal minors positive just below `beta_c`.
    pub minors_ok_below: bool,
    /// Coefficients of `det(I - M0(beta))` in ascending powers of `beta`.
    pub det_polynomial: Vec<f64>,
    pub det_residual: f64,
    /// Set when the spec carried a nonzero field, which is ignored here.
    pub field_ignored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorsReport {
    pub ok: bool,
    /// `(parties, value)` for every subset of at least two parties.
    pub minors: Vec<(Vec<usize>, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub kappa: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    /// Angle in radians between `m* / |m*|` and `w` at the smallest epsilon.
    pub direction_error: f64,
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
}

/// `M0(beta)`: `beta alpha_b` off the diagonal.
pub fn m0_matrix(alpha: &[f64], beta: f64) -> DMatrix<f64> {
    let n = alpha.len();
    DMatrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { beta * alpha[b] })
}

/// Coefficients of `1 - sum_{k>=2} beta^k (k - 1) e_k(alpha)`.
pub fn det_polynomial(alpha: &[f64]) -> Vec<f64> {
    let e = elementary_symmetric(alpha);
    e.iter()
        .enumerate()
        .map(|(k, ek)| match k {
            0 => 1.0,
            1 => 0.0,
            _ => -((k - 1) as f64) * ek,
        })
        .collect()
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn det_value(alpha: &[f64], beta: f64) -> f64 {
    horner(&det_polynomial(alpha), beta)
}

fn root_of(coeffs: &[f64]) -> Result<f64> {
    let mut hi = 1.0;
    while horner(coeffs, hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::RootFinding("determinant never changes sign".into()));
        }
    }
    brent(0.0, hi, |b| horner(coeffs, b), 1e-15)
}

pub fn critical_beta(spec: &ModelSpec) -> Result<CriticalReport> {
    spec.validate()?;
    let coeffs = det_polynomial(&spec.alpha);
    let beta_c = root_of(&coeffs)?;
    let kernel = kernel_at(&spec.alpha, beta_c)?;
    let below = minors_check(spec, beta_c * (1.0 - 1e-9))?;
    Ok(CriticalReport {
        beta_c,
        kernel,
        minors_ok_below: below.ok,
        det_residual: horner(&coeffs, beta_c),
        det_polynomial: coeffs,
        field_ignored: !spec.zero_field(),
    })
}

/// Principal-minor conditions at `beta`, one value per subset of parties.
pub fn minors_check(spec: &ModelSpec, beta: f64) -> Result<MinorsReport> {
    spec.validate()?;
    let nu = spec.nu;
    let mut minors = Vec::new();
    for mask in 1u32..(1 << nu) {
        if mask.count_ones() < 2 {
            continue;
        }
        let parties: Vec<usize> = (0..nu).filter(|a| mask & (1 << a) != 0).collect();
        let sub: Vec<f64> = parties.iter().map(|&a| spec.alpha[a]).collect();
        minors.push((parties, det_value(&sub, beta)));
    }
    minors.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(MinorsReport {
        ok: minors.iter().all(|(_, v)| *v > 0.0),
        minors,
    })
}

fn kernel_at(alpha: &[f64], beta: f64) -> Result<Vec<f64>> {
    let n = alpha.len();
    let mat = DMatrix::identity(n, n) - m0_matrix(alpha, beta);
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    if n > 1 && svd.singular_values[order[1]] < 1e-8 {
        return Err(Error::RootFinding("null space has dimension above one".into()));
    }
    let mut w: Vec<f64> = v_t.row(order[0]).iter().copied().collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lead = w.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    for x in &mut w {
        *x *= sign / norm;
    }
    Ok(w)
}

/// Unit null vector of `I - M0(beta_c)`, largest component positive.
pub fn kernel_direction(spec: &ModelSpec) -> Result<Vec<f64>> {
    Ok(critical_beta(spec)?.kernel)
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}

/// Fits `|m*| ~ epsilon^exponent` for `beta = beta_c + epsilon` over a
/// log-spaced window, and extracts `kappa` from the smallest epsilon.
pub fn scaling_fit(spec: &ModelSpec, window: (f64, f64), samples: usize) -> Result<ScalingFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && samples >= 2) {
        return Err(Error::Precondition(format!("bad window ({lo}, {hi}) with {samples} samples")));
    }
    let report = critical_beta(spec)?;
    let (beta_c, w) = (report.beta_c, report.kernel);
    let zero = spec.with_h(&vec![0.0; spec.nu]);
    let mut epsilons = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    for i in 0..samples {
        let eps = lo * (hi / lo).powf(i as f64 / (samples - 1) as f64);
        let at = zero.with_beta(beta_c + eps);
        let found = [1.0, 2.0, 0.5, 4.0, 8.0].iter().find_map(|scale| {
            let seed: Vec<f64> = w.iter().map(|x| x * scale * eps.sqrt()).collect();
            newton_solve(&at, &seed)
                .ok()
                .filter(|m| m.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-3 * eps.sqrt())
        });
        let m = found.ok_or_else(|| Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
            best: vec![eps],
        })?;
        epsilons.push(eps);
        states.push(m);
    }
    let norms: Vec<f64> = states.iter().map(|m| m.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let (exponent, _, r_squared) = linear_fit(&lx, &ly);
    let kappa = epsilons[0] / (beta_c.powi(3) * norms[0] * norms[0]);
    let cos = states[0].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norms[0];
    Ok(ScalingFit {
        exponent,
        kappa,
        window,
        r_squared,
        direction_error: cos.abs().min(1.0).acos(),
        epsilons,
        norms,
    })
}
