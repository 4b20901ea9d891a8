//! Two-party models: duality, marginal pressure landscape, critical lines,
//! critical fields and the four field regimes.
//!
//! Integrating out party 2 leaves a one-party model for `M1` with energy
//! `u1 = phi_2` evaluated at `z = alpha beta M1 + beta h2`. The resulting
//! marginal pressure, normalised per spin of the whole system, is
//!
//! `A1(M1) = (1 - alpha) [u1(z) - alpha beta M1 u1'(z)] + alpha u2(beta (1 - alpha) u1'(z) + beta h1)`
//!
//! with `u2 = phi_1`. Its maxima are the thermodynamic states; the induced
//! magnetisation of party 2 is `M2 = u1'(z)`.

use serde::{Deserialize, Serialize};

use crate::criticality::critical_beta;
use crate::error::{Error, Result};
use crate::genferro::EnergyFunction;
use crate::model::ModelSpec;
use crate::numeric::{bisect_predicate, brent, scan_roots};

/// Default number of scan points over the `M1` hull.
pub const LANDSCAPE_POINTS: usize = 4001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualEnergy {
    pub u1: EnergyFunction,
    pub u2: EnergyFunction,
    /// `(1 - alpha) / alpha`, the temperature of the party-1 model.
    pub beta1: f64,
    /// `alpha / (1 - alpha)`.
    pub beta2: f64,
}

fn require_bipartite(spec: &ModelSpec) -> Result<()> {
    if spec.nu != 2 {
        return Err(Error::NotBipartite(spec.nu));
    }
    spec.validate()
}

pub fn dual_energy(spec: &ModelSpec) -> Result<DualEnergy> {
    require_bipartite(spec)?;
    let a = spec.alpha[0];
    Ok(DualEnergy {
        u1: EnergyFunction::Duality {
            family: spec.families[1].clone(),
        },
        u2: EnergyFunction::Duality {
            family: spec.families[0].clone(),
        },
        beta1: (1.0 - a) / a,
        beta2: a / (1.0 - a),
    })
}

/// The spec with the two parties exchanged.
pub fn swapped(spec: &ModelSpec) -> ModelSpec {
    ModelSpec {
        nu: 2,
        alpha: vec![spec.alpha[1], spec.alpha[0]],
        h: vec![spec.h[1], spec.h[0]],
        beta: spec.beta,
        families: vec![spec.families[1].clone(), spec.families[0].clone()],
    }
}

/// `[A1, A1', A1'']` at `m1`.
pub fn marginal_pressure_derivatives(spec: &ModelSpec, m1: f64) -> Result<[f64; 3]> {
    require_bipartite(spec)?;
    let (a, b) = (spec.alpha[0], spec.beta);
    let (p1, p2) = (&spec.families[0], &spec.families[1]);
    let z = a * b * m1 + b * spec.h[1];
    let u1 = p2.derivatives(z);
    let w = b * (1.0 - a) * u1[1] + b * spec.h[0];
    let u2 = p1.derivatives(w);
    let value = (1.0 - a) * (u1[0] - a * b * m1 * u1[1]) + a * u2[0];
    let pre = a * a * b * b * (1.0 - a);
    let gap = u2[1] - m1;
    let first = pre * u1[2] * gap;
    let g_prime = u2[2] * b * (1.0 - a) * u1[2] * a * b;
    let second = pre * (u1[3] * a * b * gap + u1[2] * (g_prime - 1.0));
    Ok([value, first, second])
}

pub fn marginal_pressure(spec: &ModelSpec, m1: f64) -> Result<f64> {
    Ok(marginal_pressure_derivatives(spec, m1)?[0])
}

/// Marginal pressure in `M2`, integrating out party 1.
pub fn marginal_pressure_other(spec: &ModelSpec, m2: f64) -> Result<f64> {
    require_bipartite(spec)?;
    marginal_pressure(&swapped(spec), m2)
}

/// `M2 = u1'(alpha beta M1 + beta h2)`.
pub fn induced_m2(spec: &ModelSpec, m1: f64) -> f64 {
    spec.families[1].phi_prime(spec.beta * (spec.alpha[0] * m1 + spec.h[1]))
}

/// `G(M1) - M1`; same sign as `A1'`.
fn gap(spec: &ModelSpec, m1: f64) -> f64 {
    let w = spec.beta * ((1.0 - spec.alpha[0]) * induced_m2(spec, m1) + spec.h[0]);
    spec.families[0].phi_prime(w) - m1
}

/// Stationary points of `A1`, ascending.
pub fn marginal_stationary(spec: &ModelSpec, points: usize) -> Result<Vec<f64>> {
    require_bipartite(spec)?;
    let hull = spec.families[0].hull();
    let mut roots = scan_roots(|m| gap(spec, m), -hull, hull, points.max(2) - 1, 1e-15);
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(roots)
}

/// Global maximiser of `A1` and the maximum.
pub fn marginal_optimum(spec: &ModelSpec) -> Result<(f64, f64)> {
    let roots = marginal_stationary(spec, LANDSCAPE_POINTS)?;
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for m in roots {
        let v = marginal_pressure(spec, m)?;
        // ascending roots: ties go to the larger magnetisation
        if v >= best.1 - 1e-14 * v.abs().max(1.0) {
            best = (m, v.max(best.1));
        }
    }
    if best.0.is_nan() {
        return Err(Error::RootFinding("marginal pressure has no stationary point".into()));
    }
    Ok(best)
}

/// `h1 = -(1 - alpha) u1'(beta h2)`: the field pairs where `M1 = 0` solves
/// the coupled system.
pub fn critical_line_1(spec: &ModelSpec, h2: f64) -> f64 {
    -(1.0 - spec.alpha[0]) * spec.families[1].phi_prime(spec.beta * h2)
}

/// `h2 = -alpha u2'(beta h1)` solved for `h1` at given `h2`.
pub fn critical_line_2(spec: &ModelSpec, h2: f64) -> Result<f64> {
    let a = spec.alpha[0];
    let target = -h2 / a;
    let t = spec.families[0].inverse_phi_prime(target).map_err(|_| {
        Error::RootFinding(format!(
            "line 2 has no point at h2 = {h2}: |h2| / alpha reaches the spin hull"
        ))
    })?;
    if spec.beta == 0.0 {
        return Err(Error::RootFinding("line 2 is degenerate at beta = 0".into()));
    }
    Ok(t / spec.beta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub h2: f64,
    pub h1_line1: f64,
    pub h1_line2: Option<f64>,
    /// Residual of the `M1 = 0` root on line 1.
    pub residual1: f64,
    /// Residual of the `M2 = 0` root on line 2.
    pub residual2: Option<f64>,
}

pub fn critical_lines(spec: &ModelSpec, h2_grid: &[f64]) -> Result<Vec<LinePoint>> {
    require_bipartite(spec)?;
    let (a, b) = (spec.alpha[0], spec.beta);
    Ok(h2_grid
        .iter()
        .map(|&h2| {
            let h1 = critical_line_1(spec, h2);
            let m2 = spec.families[1].phi_prime(b * h2);
            let residual1 = spec.families[0].phi_prime(b * (1.0 - a) * m2 + b * h1).abs();
            let (h1_line2, residual2) = match critical_line_2(spec, h2) {
                Ok(h1b) => {
                    let m1 = spec.families[0].phi_prime(b * h1b);
                    (Some(h1b), Some(spec.families[1].phi_prime(b * (a * m1 + h2)).abs()))
                }
                Err(_) => (None, None),
            };
            LinePoint {
                h2,
                h1_line1: h1,
                h1_line2,
                residual1,
                residual2,
            }
        })
        .collect())
}

/// Both lines in implicit form `(h1 + (1-alpha) u1'(beta h2), h2 + alpha u2'(beta h1))`.
fn line_residuals(spec: &ModelSpec, h1: f64, h2: f64) -> (f64, f64) {
    let (a, b) = (spec.alpha[0], spec.beta);
    (
        h1 + (1.0 - a) * spec.families[1].phi_prime(b * h2),
        h2 + a * spec.families[0].phi_prime(b * h1),
    )
}

fn polish_intersection(spec: &ModelSpec, mut h1: f64, mut h2: f64) -> Option<(f64, f64)> {
    let (a, b) = (spec.alpha[0], spec.beta);
    for _ in 0..100 {
        let (f1, f2) = line_residuals(spec, h1, h2);
        if f1.abs().max(f2.abs()) < 1e-15 {
            return Some((h1, h2));
        }
        let j12 = (1.0 - a) * b * spec.families[1].phi_second(b * h2);
        let j21 = a * b * spec.families[0].phi_second(b * h1);
        let det = 1.0 - j12 * j21;
        if det.abs() < 1e-300 {
            return None;
        }
        h1 -= (f1 - j12 * f2) / det;
        h2 -= (f2 - j21 * f1) / det;
    }
    let (f1, f2) = line_residuals(spec, h1, h2);
    (f1.abs().max(f2.abs()) < 1e-12).then_some((h1, h2))
}

/// Intersections of the two critical lines located on an `n x n` grid over
/// `[-range, range]^2` and polished by Newton, sorted by `h2`.
pub fn line_intersections(spec: &ModelSpec, range: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    require_bipartite(spec)?;
    let coord = |i: usize| -range + 2.0 * range * i as f64 / n as f64;
    let vals: Vec<Vec<(f64, f64)>> = (0..=n)
        .map(|i| (0..=n).map(|j| line_residuals(spec, coord(i), coord(j))).collect())
        .collect();
    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let corners = [vals[i][j], vals[i + 1][j], vals[i][j + 1], vals[i + 1][j + 1]];
            let changes = |k: usize| {
                let s: Vec<f64> = corners.iter().map(|c| if k == 0 { c.0 } else { c.1 }).collect();
                let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            if changes(0) && changes(1) {
                let centre = (0.5 * (coord(i) + coord(i + 1)), 0.5 * (coord(j) + coord(j + 1)));
                if let Some(p) = polish_intersection(spec, centre.0, centre.1) {
                    if !found.iter().any(|q| (q.0 - p.0).abs().max((q.1 - p.1).abs()) < 1e-9) {
                        found.push(p);
                    }
                }
            }
        }
    }
    found.sort_by(|x, y| x.1.total_cmp(&y.1));
    Ok(found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Single minimum of `-A1` at zero.
    R0,
    /// Zero global, a metastable minimum at `M-`.
    R1,
    /// `M-` global, zero metastable.
    R2,
    /// `M-` global, `M+` metastable, zero a maximum.
    R3,
    Unclassified,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::R0 => "R0",
            Regime::R1 => "R1",
            Regime::R2 => "R2",
            Regime::R3 => "R3",
            Regime::Unclassified => "unclassified",
        };
        f.write_str(s)
    }
}

/// Label of a stationary point of `-A1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointLabel {
    GlobalMin,
    LocalMin,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub m1: f64,
    pub a1: f64,
    pub a1_second: f64,
    pub label: PointLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub h1: f64,
    pub h2: f64,
    pub points: Vec<LandscapePoint>,
    pub regime: Regime,
    pub global_m1: f64,
    pub global_m2: f64,
    pub global_a1: f64,
}

impl LandscapeReport {
    pub fn local_minima(&self) -> usize {
        self.points.iter().filter(|p| p.label != PointLabel::Max).count()
    }
}

/// Stationary points on line 1, where zero is always one of them. The other
/// roots are found from `gap(M) / M` so that a root close to zero is not lost
/// in the same scan cell.
fn line_stationary(spec: &ModelSpec, points: usize) -> Result<Vec<f64>> {
    let mut roots = marginal_stationary(spec, points)?;
    if gap(spec, 0.0).abs() > 1e-12 {
        return Ok(roots);
    }
    let d = 1e-7;
    let slope = (gap(spec, d) - gap(spec, -d)) / (2.0 * d);
    let deflated = |m: f64| if m == 0.0 { slope } else { gap(spec, m) / m };
    let hull = spec.families[0].hull();
    roots.push(0.0);
    roots.extend(scan_roots(deflated, -hull, hull, points.max(2) - 1, 1e-15));
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(roots)
}

fn scan_at(spec: &ModelSpec, points: usize) -> Result<LandscapeReport> {
    let roots = line_stationary(spec, points)?;
    let mut pts = Vec::with_capacity(roots.len());
    for m in roots {
        let d = marginal_pressure_derivatives(spec, m)?;
        pts.push(LandscapePoint {
            m1: m,
            a1: d[0],
            a1_second: d[2],
            label: if d[2] < 0.0 { PointLabel::LocalMin } else { PointLabel::Max },
        });
    }
    let best = pts
        .iter()
        .filter(|p| p.label == PointLabel::LocalMin)
        .map(|p| p.a1)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-12 * best.abs().max(1.0);
    for p in &mut pts {
        if p.label == PointLabel::LocalMin && p.a1 >= best - tie {
            p.label = PointLabel::GlobalMin;
        }
    }
    let global = pts
        .iter()
        .filter(|p| p.label == PointLabel::GlobalMin)
        .min_by(|x, y| x.m1.total_cmp(&y.m1))
        .cloned()
        .ok_or_else(|| Error::RootFinding("landscape has no minimum".into()))?;
    let zero = pts.iter().find(|p| p.m1.abs() < 1e-9);
    let others = pts.iter().filter(|p| p.m1.abs() >= 1e-9 && p.label != PointLabel::Max).count();
    let regime = match zero.map(|p| p.label) {
        Some(PointLabel::GlobalMin) if others == 0 => Regime::R0,
        Some(PointLabel::GlobalMin) => Regime::R1,
        Some(PointLabel::LocalMin) => Regime::R2,
        Some(PointLabel::Max) if others >= 2 => Regime::R3,
        _ => Regime::Unclassified,
    };
    Ok(LandscapeReport {
        h1: spec.h[0],
        h2: spec.h[1],
        global_m1: global.m1,
        global_m2: induced_m2(spec, global.m1),
        global_a1: global.a1,
        points: pts,
        regime,
    })
}

fn on_line_1(spec: &ModelSpec, h2: f64) -> ModelSpec {
    spec.with_h(&[critical_line_1(spec, h2), h2])
}

/// Landscape of `-A1` at `(h1, h2)` on line 1. Negative `h2` is obtained by
/// mirroring the `|h2|` landscape.
pub fn landscape_scan(spec: &ModelSpec, h2: f64, points: usize) -> Result<LandscapeReport> {
    require_bipartite(spec)?;
    if h2 < 0.0 {
        let mut r = scan_at(&on_line_1(spec, -h2), points)?;
        r.h1 = -r.h1;
        r.h2 = -r.h2;
        r.global_m1 = -r.global_m1;
        r.global_m2 = -r.global_m2;
        for p in &mut r.points {
            p.m1 = -p.m1;
        }
        r.points.reverse();
        return Ok(r);
    }
    scan_at(&on_line_1(spec, h2), points)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalFields {
    pub h_c1: Option<f64>,
    pub h_c2: Option<f64>,
    pub h_c3: Option<f64>,
    pub note: Option<String>,
}

/// Solves `beta^2 alpha (1 - alpha) u1''(beta h2) = 1` for `h2 > 0`.
fn first_field(spec: &ModelSpec) -> Result<f64> {
    let (a, b) = (spec.alpha[0], spec.beta);
    let f = |h2: f64| b * b * a * (1.0 - a) * spec.families[1].phi_second(b * h2) - 1.0;
    let mut hi = 0.1;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::RootFinding("first critical field not bracketed".into()));
        }
    }
    brent(0.0, hi, f, 1e-15)
}

/// Positive-`h2` intersection of the critical lines.
fn second_field(spec: &ModelSpec) -> Result<f64> {
    let a = spec.alpha[0];
    let top = a * spec.families[0].hull();
    let diff = |h2: f64| match critical_line_2(spec, h2) {
        Ok(h1) => critical_line_1(spec, h2) - h1,
        Err(_) => f64::NAN,
    };
    let n = 4000;
    let mut prev = (top * 1e-6, diff(top * 1e-6));
    for i in 1..n {
        let h2 = top * i as f64 / n as f64;
        let d = diff(h2);
        if d.is_finite() && prev.1.is_finite() && d.signum() != prev.1.signum() {
            let h2 = brent(prev.0, h2, diff, 1e-15)?;
            let h1 = critical_line_1(spec, h2);
            let (_, h2) = polish_intersection(spec, h1, h2).unwrap_or((h1, h2));
            return Ok(h2);
        }
        prev = (h2, d);
    }
    Err(Error::RootFinding("critical lines do not cross at positive h2".into()))
}

fn local_min_count(spec: &ModelSpec, h2: f64) -> usize {
    landscape_scan(spec, h2, LANDSCAPE_POINTS).map(|r| r.local_minima()).unwrap_or(0)
}

/// Newton on `(A1'(M) = 0, A1''(M) = 0)` in `(M, h2)` along line 1.
fn polish_fold(spec: &ModelSpec, m: f64, h2: f64) -> Option<(f64, f64)> {
    let eval = |m: f64, h2: f64| -> (f64, f64) {
        let s = on_line_1(spec, h2);
        let g = gap(&s, m);
        let dm = 1e-6;
        let g1 = (gap(&s, m + dm) - gap(&s, m - dm)) / (2.0 * dm);
        (g, g1)
    };
    let (mut m, mut h) = (m, h2);
    for _ in 0..50 {
        let (f1, f2) = eval(m, h);
        if f1.abs() < 1e-13 && f2.abs() < 1e-9 {
            return Some((m, h));
        }
        let (dm, dh) = (1e-5, 1e-7);
        let (a1, a2) = eval(m + dm, h);
        let (b1, b2) = eval(m, h + dh);
        let j = [(a1 - f1) / dm, (b1 - f1) / dh, (a2 - f2) / dm, (b2 - f2) / dh];
        let det = j[0] * j[3] - j[1] * j[2];
        if det.abs() < 1e-300 {
            return None;
        }
        m -= (f1 * j[3] - j[1] * f2) / det;
        h -= (j[0] * f2 - j[2] * f1) / det;
    }
    None
}

/// Spinodal where the `M-` minimum disappears, above `start`.
fn third_field(spec: &ModelSpec, start: f64) -> Result<f64> {
    let mut lo = start;
    let mut hi = start + 0.05;
    while local_min_count(spec, hi) > 1 {
        lo = hi;
        hi += 0.05;
        if hi > 1e3 {
            return Err(Error::RootFinding("spinodal not bracketed".into()));
        }
    }
    if local_min_count(spec, lo) < 2 {
        return Err(Error::RootFinding("no metastable branch above the second critical field".into()));
    }
    let h = bisect_predicate(lo, hi, |h| local_min_count(spec, h) < 2, 1e-8);
    // the pair about to merge is the lowest two stationary points on line 1
    let report = landscape_scan(spec, lo.max(h - 1e-6), LANDSCAPE_POINTS)?;
    let guess = report
        .points
        .iter()
        .filter(|p| p.m1 < -1e-9)
        .map(|p| p.m1)
        .collect::<Vec<_>>();
    let guess_m = match guess.as_slice() {
        [x, y, ..] => 0.5 * (x + y),
        [x] => *x,
        [] => return Ok(h),
    };
    Ok(match polish_fold(spec, guess_m, h) {
        Some((_, hp)) if (hp - h).abs() < 1e-6 => hp,
        _ => h,
    })
}

pub fn critical_fields(spec: &ModelSpec) -> Result<CriticalFields> {
    require_bipartite(spec)?;
    let bc = critical_beta(spec)?.beta_c;
    if spec.beta <= bc {
        return Ok(CriticalFields {
            note: Some(format!("beta = {} is not above beta_c = {bc}", spec.beta)),
            ..Default::default()
        });
    }
    let h_c1 = first_field(spec)?;
    let h_c2 = second_field(spec)?;
    let h_c3 = third_field(spec, h_c2)?;
    Ok(CriticalFields {
        h_c1: Some(h_c1),
        h_c2: Some(h_c2),
        h_c3: Some(h_c3),
        note: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    /// Where the `M-` branch and the zero branch have equal pressure.
    pub h2_crossing: f64,
    /// Positive intersection of the critical lines.
    pub h2_lines: f64,
    pub m1_before: f64,
    pub m1_after: f64,
    pub m2_before: f64,
    pub m2_after: f64,
}

/// Pressure of the negative branch minus the zero branch, on line 1.
fn branch_gap(spec: &ModelSpec, h2: f64) -> Result<f64> {
    let s = on_line_1(spec, h2);
    let roots = marginal_stationary(&s, LANDSCAPE_POINTS)?;
    let neg = roots
        .iter()
        .copied()
        .filter(|m| *m < -1e-9)
        .filter(|&m| marginal_pressure_derivatives(&s, m).map(|d| d[2] < 0.0).unwrap_or(false))
        .min_by(|x, y| x.total_cmp(y))
        .ok_or_else(|| Error::RootFinding(format!("no negative branch at h2 = {h2}")))?;
    Ok(marginal_pressure(&s, neg)? - marginal_pressure(&s, 0.0)?)
}

/// First-order transition along line 1. `None` at or below `beta_c`.
pub fn first_order_jump(spec: &ModelSpec) -> Result<Option<JumpRecord>> {
    let fields = critical_fields(spec)?;
    let (Some(h1c), Some(h2c), Some(h3c)) = (fields.h_c1, fields.h_c2, fields.h_c3) else {
        return Ok(None);
    };
    let lo = h1c;
    let hi = h3c - 1e-4 * (h3c - h1c);
    let crossing = brent(lo, hi, |h| branch_gap(spec, h).unwrap_or(f64::NAN), 1e-14)?;
    let delta = 1e-3;
    let before = landscape_scan(spec, crossing - delta, LANDSCAPE_POINTS)?;
    let after = landscape_scan(spec, crossing + delta, LANDSCAPE_POINTS)?;
    Ok(Some(JumpRecord {
        h2_crossing: crossing,
        h2_lines: h2c,
        m1_before: before.global_m1,
        m1_after: after.global_m1,
        m2_before: before.global_m2,
        m2_after: after.global_m2,
    }))
}

/// One row of the phase-diagram table along line 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub h2: f64,
    pub h1: f64,
    pub m1_global: f64,
    pub m2_global: f64,
    pub regime: Regime,
    pub a1_global: f64,
    pub stationary: Vec<LandscapePoint>,
}

pub fn phase_rows(spec: &ModelSpec, h2_grid: &[f64], points: usize) -> Result<Vec<PhaseRow>> {
    h2_grid
        .iter()
        .map(|&h2| {
            let r = landscape_scan(spec, h2, points)?;
            Ok(PhaseRow {
                h2,
                h1: r.h1,
                m1_global: r.global_m1,
                m2_global: r.global_m2,
                regime: r.regime,
                a1_global: r.global_a1,
                stationary: r.points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{equilibrium, pressure_energy_entropy, StartGrid};
    use crate::spins::SpinFamily;

    const M_STAR: f64 = 0.957_504_024_077_268_8;
    const A_STAR: f64 = 0.326_523_887_426_923_8;

    fn bip(beta: f64) -> ModelSpec {
        ModelSpec::rademacher(&[0.5, 0.5], beta).unwrap()
    }

    #[test]
    fn transcritical_root_near_first_field() {
        let spec = bip(4.0);
        let h1 = 2f64.acosh() / 4.0;
        for dh in [-3e-5, -1e-6, 1e-6, 3e-5] {
            let r = landscape_scan(&spec, h1 + dh, LANDSCAPE_POINTS).unwrap();
            let expected = if dh < 0.0 { Regime::R3 } else { Regime::R2 };
            assert_eq!(r.regime, expected, "dh = {dh}");
        }
    }

    #[test]
    fn dual_energy_examples() {
        let d = dual_energy(&bip(1.0)).unwrap();
        for x in [-1.5, 0.2, 3.0] {
            assert!((d.u1.value(x) - f64::cosh(x).ln()).abs() < 1e-14);
            assert_eq!(d.u1.value(x), d.u2.value(x));
        }
        assert_eq!(d.u1.second(0.0), 1.0);
        let mixed = ModelSpec {
            families: vec![SpinFamily::Rademacher, SpinFamily::Uniform],
            ..bip(1.0)
        };
        let d = dual_energy(&mixed).unwrap();
        assert!((d.u1.second(0.0) - 1.0).abs() < 1e-14);
        let x: f64 = 0.8;
        let s = 3f64.sqrt() * x;
        assert!((d.u1.value(x) - (s.sinh() / s).ln()).abs() < 1e-14);
        let grid: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.1).collect();
        d.u1.check_on_grid(&grid).unwrap();
        assert!(matches!(dual_energy(&ModelSpec::rademacher(&[0.2, 0.3, 0.5], 1.0).unwrap()), Err(Error::NotBipartite(3))));
    }

    #[test]
    fn marginal_pressure_examples() {
        assert_eq!(marginal_pressure(&bip(4.0), 0.0).unwrap(), 0.0);
        assert!((marginal_pressure(&bip(4.0), M_STAR).unwrap() - A_STAR).abs() < 1e-12);
        for m in [0.1, 0.5, 0.9] {
            let s = bip(3.0);
            assert_eq!(marginal_pressure(&s, m).unwrap(), marginal_pressure(&s, -m).unwrap());
        }
    }

    #[test]
    fn marginal_derivatives_match_differences() {
        let s = ModelSpec::rademacher(&[0.3, 0.7], 3.0).unwrap().with_h(&[0.1, -0.2]);
        for m in [-0.8, -0.1, 0.4] {
            let d = marginal_pressure_derivatives(&s, m).unwrap();
            let e = 1e-5;
            let f = |x| marginal_pressure(&s, x).unwrap();
            assert!(((f(m + e) - f(m - e)) / (2.0 * e) - d[1]).abs() < 1e-8);
            let g = |x| marginal_pressure_derivatives(&s, x).unwrap()[1];
            assert!(((g(m + e) - g(m - e)) / (2.0 * e) - d[2]).abs() < 1e-7);
        }
    }

    #[test]
    fn duality_matches_stationary_pressure() {
        for (alpha, beta, h) in [(0.5, 4.0, [0.0, 0.0]), (0.3, 2.0, [0.1, -0.2]), (0.6, 3.5, [-0.05, 0.3])] {
            let s = ModelSpec::rademacher(&[alpha, 1.0 - alpha], beta).unwrap().with_h(&h);
            let (m1, a1) = marginal_optimum(&s).unwrap();
            let eq = equilibrium(&s).unwrap();
            assert!((a1 - eq.pressure).abs() < 1e-10);
            assert!((m1 - eq.m[0]).abs() < 1e-8 || (m1 + eq.m[0]).abs() < 1e-8);
            let (_, a2) = marginal_optimum(&swapped(&s)).unwrap();
            assert!((a2 - a1).abs() < 1e-10);
            assert!((marginal_pressure_other(&s, eq.m[1]).unwrap() - a1).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_points_solve_coupled_system() {
        let s = bip(4.0).with_h(&[-0.2, 0.3]);
        for m1 in marginal_stationary(&s, LANDSCAPE_POINTS).unwrap() {
            let m2 = induced_m2(&s, m1);
            let back = s.families[0].phi_prime(s.beta * (0.5 * m2 + s.h[0]));
            assert!((back - m1).abs() < 1e-10);
            let full = pressure_energy_entropy(&s, &[m1, m2]);
            assert!((full - marginal_pressure(&s, m1).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn synchronised_ordering() {
        for alpha in [0.5, 0.3] {
            let s = ModelSpec::rademacher(&[alpha, 1.0 - alpha], 1.0).unwrap();
            let bc = critical_beta(&s).unwrap().beta_c;
            let below = marginal_stationary(&s.with_beta(0.9 * bc), LANDSCAPE_POINTS).unwrap();
            assert_eq!(below, vec![0.0]);
            let above = s.with_beta(1.3 * bc);
            let (m1, _) = marginal_optimum(&above).unwrap();
            assert!(m1 * induced_m2(&above, m1) > 0.0);
        }
    }

    #[test]
    fn critical_line_examples() {
        let s = bip(4.0);
        let pts = critical_lines(&s, &[0.0, 0.1]).unwrap();
        assert_eq!(pts[0].h1_line1, 0.0);
        assert_eq!(pts[0].h1_line2, Some(0.0));
        assert!((pts[1].h1_line1 + 0.5 * 0.4f64.tanh()).abs() < 1e-15);
        assert!((pts[1].h1_line1 + 0.189_974_9).abs() < 1e-6);
        for p in &pts {
            assert!(p.residual1 < 1e-10 && p.residual2.unwrap() < 1e-10);
        }
        assert!(critical_line_2(&s, 0.6).is_err());
        let cold = line_intersections(&bip(1.0), 2.0, 200).unwrap();
        assert_eq!(cold.len(), 1);
        assert!(cold[0].0.abs() < 1e-12 && cold[0].1.abs() < 1e-12);
        let hot = line_intersections(&s, 1.0, 200).unwrap();
        assert_eq!(hot.len(), 3);
    }

    #[test]
    fn critical_fields_at_beta_four() {
        let f = critical_fields(&bip(4.0)).unwrap();
        let (h1, h2, h3) = (f.h_c1.unwrap(), f.h_c2.unwrap(), f.h_c3.unwrap());
        assert!((h1 - 2f64.acosh() / 4.0).abs() < 1e-9);
        // t = tanh(2 tanh(4t)) / 2
        let mut t: f64 = 0.4;
        for _ in 0..200 {
            t = 0.5 * (2.0 * (4.0 * t).tanh()).tanh();
        }
        assert!((h2 - t).abs() < 1e-10);
        assert!((h2 - 0.47875).abs() < 1e-5);
        assert!(0.0 < h1 && h1 < h2 && h2 < h3);
        let r = landscape_scan(&bip(4.0), h3 - 1e-5, LANDSCAPE_POINTS).unwrap();
        assert_eq!(r.regime, Regime::R1);
        let r = landscape_scan(&bip(4.0), h3 + 1e-5, LANDSCAPE_POINTS).unwrap();
        assert_eq!(r.regime, Regime::R0);
        assert!(critical_fields(&bip(1.5)).unwrap().h_c1.is_none());
    }

    #[test]
    fn regimes_along_line_one() {
        let s = bip(4.0);
        let f = critical_fields(&s).unwrap();
        let (h1, h2, h3) = (f.h_c1.unwrap(), f.h_c2.unwrap(), f.h_c3.unwrap());
        let mid = |a: f64, b: f64| 0.5 * (a + b);
        assert_eq!(landscape_scan(&s, mid(0.0, h1), LANDSCAPE_POINTS).unwrap().regime, Regime::R3);
        assert_eq!(landscape_scan(&s, mid(h1, h2), LANDSCAPE_POINTS).unwrap().regime, Regime::R2);
        let r1 = landscape_scan(&s, mid(h2, h3), LANDSCAPE_POINTS).unwrap();
        assert_eq!(r1.regime, Regime::R1);
        assert!(r1.points.iter().any(|p| p.m1 < -0.1 && p.label == PointLabel::LocalMin));
        assert_eq!(landscape_scan(&s, h3 + 0.1, LANDSCAPE_POINTS).unwrap().regime, Regime::R0);
        for h in [0.1, 0.5, 1.0] {
            let r = landscape_scan(&bip(1.0), h, LANDSCAPE_POINTS).unwrap();
            assert_eq!(r.regime, Regime::R0);
            assert_eq!(r.points.len(), 1);
        }
        // negative field mirrors
        let pos = landscape_scan(&s, 0.2, LANDSCAPE_POINTS).unwrap();
        let neg = landscape_scan(&s, -0.2, LANDSCAPE_POINTS).unwrap();
        assert_eq!(pos.regime, neg.regime);
        assert!((pos.global_m1 + neg.global_m1).abs() < 1e-15);
    }

    #[test]
    fn first_order_jump_at_beta_four() {
        let j = first_order_jump(&bip(4.0)).unwrap().unwrap();
        assert!((j.h2_crossing - j.h2_lines).abs() < 1e-6);
        assert!(j.m2_before < 0.0 && j.m2_after > 0.0);
        assert!(j.m1_before < -0.5 && j.m1_after.abs() < 1e-9);
        assert!(first_order_jump(&bip(1.0)).unwrap().is_none());
    }

    #[test]
    fn classification_uses_marginal_curvature() {
        let s = bip(4.0);
        let pts = crate::solver::solve_self_consistency(&s, &StartGrid::default()).unwrap();
        let zero = pts.iter().find(|p| p.m.iter().all(|x| x.abs() < 1e-9)).unwrap();
        assert!(marginal_pressure_derivatives(&s, zero.m[0]).unwrap()[2] > 0.0);
    }
}
