//! Single-spin laws and their cumulant generating functions.
//!
//! Every party of the model draws its spins i.i.d. from a symmetric law with
//! unit variance and strictly negative excess kurtosis. The law enters the
//! thermodynamics only through `phi(t) = log E[exp(t * sigma)]` and its first
//! four derivatives, which this module evaluates exactly: in closed form for
//! the `±1` and uniform laws, and by a shifted log-sum-exp over the atoms for
//! every other finite law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_cosh, log_sum_exp};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Taylor coefficients of `log(sinh x / x)` in powers `x^2, x^4, ..., x^42`.
const LOG_SINHC_SERIES: [f64; 21] = [
    1.666_666_666_666_666_7e-1,
    -5.555_555_555_555_555_6e-3,
    3.527_336_860_670_194e-4,
    -2.645_502_645_502_645_5e-5,
    2.137_779_915_557_693_3e-6,
    -1.803_670_234_005_331e-7,
    1.566_139_132_276_698_4e-8,
    -1.388_413_049_373_730e-9,
    1.250_435_917_600_499_6e-10,
    -1.140_257_560_229_609_1e-11,
    1.050_292_390_863_755_6e-12,
    -9.754_877_841_593_702e-14,
    9.123_468_230_859_098e-15,
    -8.583_719_761_895_609e-16,
    8.117_318_009_727_79e-17,
    -7.710_527_514_116_273e-18,
    7.352_844_932_712_003e-19,
    -7.036_101_210_390_652e-20,
    6.753_847_290_217_444e-21,
    -6.500_924_115_034_318e-22,
    6.273_155_486_703_286e-23,
];

/// A symmetric single-spin law.
///
/// Serialised with an internal `kind` tag, e.g. `{"kind": "rademacher"}` or
/// `{"kind": "three_point", "q": 0.5, "a": 1.4142135623730951}`. For the
/// three-point law `a` may be omitted, giving the unit-variance choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawFamily")]
pub enum SpinFamily {
    /// `±1` with equal probability.
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    /// `0` with probability `q`, `±a` with probability `(1 - q) / 2` each.
    ThreePoint { q: f64, a: f64 },
    /// Arbitrary finite support; weights are normalised on use.
    Finite { support: Vec<f64>, weights: Vec<f64> },
}

// Flat mirror of the tagged form so that stray keys are rejected for every kind.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    kind: String,
    q: Option<f64>,
    a: Option<f64>,
    support: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawFamily> for SpinFamily {
    type Error = String;

    fn try_from(raw: RawFamily) -> std::result::Result<Self, String> {
        let RawFamily {
            kind,
            q,
            a,
            support,
            weights,
        } = raw;
        let extra = |ok: bool| if ok { Ok(()) } else { Err(format!("unexpected parameters for kind `{kind}`")) };
        match kind.as_str() {
            "rademacher" | "uniform" => {
                extra(q.is_none() && a.is_none() && support.is_none() && weights.is_none())?;
                Ok(if kind == "uniform" { SpinFamily::Uniform } else { SpinFamily::Rademacher })
            }
            "three_point" => {
                extra(support.is_none() && weights.is_none())?;
                let q = q.ok_or("three_point needs `q`")?;
                Ok(match a {
                    Some(a) => SpinFamily::ThreePoint { q, a },
                    None => SpinFamily::three_point(q),
                })
            }
            "finite" => {
                extra(q.is_none() && a.is_none())?;
                Ok(SpinFamily::Finite {
                    support: support.ok_or("finite needs `support`")?,
                    weights: weights.ok_or("finite needs `weights`")?,
                })
            }
            other => Err(format!("unknown spin family `{other}`")),
        }
    }
}

/// `phi` and its derivatives at one point. Derivatives above the requested
/// order are `NaN`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgfEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl CgfEval {
    fn from_array(d: [f64; 5], order: usize) -> Self {
        let pick = |k: usize| if k <= order { d[k] } else { f64::NAN };
        CgfEval {
            value: d[0],
            d1: pick(1),
            d2: pick(2),
            d3: pick(3),
            d4: pick(4),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValidationFailure {
    BadWeights(String),
    Asymmetric { point: f64 },
    Variance(f64),
    Kurtosis { fourth_moment: f64 },
}

impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationFailure::BadWeights(s) => write!(f, "bad weights: {s}"),
            ValidationFailure::Asymmetric { point } => {
                write!(f, "weight of {point} differs from weight of {}", -point)
            }
            ValidationFailure::Variance(v) => write!(f, "variance {v} is not 1"),
            ValidationFailure::Kurtosis { fourth_moment } => {
                write!(f, "fourth moment {fourth_moment} is not below 3")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl SpinFamily {
    /// Three-point law with hole probability `q`, scaled to unit variance.
    pub fn three_point(q: f64) -> Self {
        SpinFamily::ThreePoint {
            q,
            a: 1.0 / (1.0 - q).sqrt(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpinFamily::Rademacher => "rademacher".into(),
            SpinFamily::Uniform => "uniform".into(),
            SpinFamily::ThreePoint { q, .. } => format!("three_point(q={q})"),
            SpinFamily::Finite { support, .. } => format!("finite({} atoms)", support.len()),
        }
    }

    /// Atoms `(x, p)` with probabilities summing to one, or `None` for the
    /// continuous uniform law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            SpinFamily::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            SpinFamily::Uniform => None,
            SpinFamily::ThreePoint { q, a } => {
                let side = 0.5 * (1.0 - q);
                Some(vec![(-a, side), (0.0, *q), (*a, side)])
            }
            SpinFamily::Finite { support, weights } => {
                let total: f64 = weights.iter().sum();
                Some(
                    support
                        .iter()
                        .zip(weights)
                        .map(|(&x, &w)| (x, w / total))
                        .collect(),
                )
            }
        }
    }

    /// Largest `|sigma|` in the support; magnetisations live in `[-hull, hull]`.
    pub fn hull(&self) -> f64 {
        match self {
            SpinFamily::Rademacher => 1.0,
            SpinFamily::Uniform => SQRT3,
            _ => self
                .atoms()
                .unwrap_or_default()
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .fold(0.0, |m, (x, _)| m.max(x.abs())),
        }
    }

    /// Raw moment `E[sigma^k]`.
    pub fn moment(&self, k: u32) -> f64 {
        match self {
            SpinFamily::Uniform => {
                if k % 2 == 1 {
                    0.0
                } else {
                    SQRT3.powi(k as i32) / (k as f64 + 1.0)
                }
            }
            _ => self
                .atoms()
                .unwrap_or_default()
                .iter()
                .map(|(x, p)| p * x.powi(k as i32))
                .sum(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        if let SpinFamily::Finite { support, weights } = self {
            if support.len() != weights.len() || support.is_empty() {
                failures.push(ValidationFailure::BadWeights(format!(
                    "{} support points, {} weights",
                    support.len(),
                    weights.len()
                )));
                return ValidationReport { failures };
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                failures.push(ValidationFailure::BadWeights("weights must be non-negative with positive sum".into()));
                return ValidationReport { failures };
            }
            if support.iter().any(|x| !x.is_finite()) {
                failures.push(ValidationFailure::BadWeights("support must be finite".into()));
                return ValidationReport { failures };
            }
        }
        if let SpinFamily::ThreePoint { q, a } = self {
            if !(0.0..1.0).contains(q) || !(a.is_finite() && *a > 0.0) {
                failures.push(ValidationFailure::BadWeights(format!("need 0 <= q < 1 and a > 0, got q={q}, a={a}")));
                return ValidationReport { failures };
            }
        }
        if let Some(atoms) = self.atoms() {
            for &(x, _) in &atoms {
                if x == 0.0 {
                    continue;
                }
                let mirror: f64 = atoms.iter().filter(|(y, _)| (y + x).abs() <= 1e-12 * x.abs().max(1.0)).map(|(_, q)| q).sum();
                let same: f64 = atoms.iter().filter(|(y, _)| (y - x).abs() <= 1e-12 * x.abs().max(1.0)).map(|(_, q)| q).sum();
                if (mirror - same).abs() > 1e-12 {
                    failures.push(ValidationFailure::Asymmetric { point: x });
                    break;
                }
            }
        }
        let var = self.moment(2);
        if (var - 1.0).abs() > 1e-12 {
            failures.push(ValidationFailure::Variance(var));
        }
        let m4 = self.moment(4);
        if !(m4 - 3.0 * var * var < -1e-12) {
            failures.push(ValidationFailure::Kurtosis { fourth_moment: m4 });
        }
        ValidationReport { failures }
    }

    /// Ok if the family passes [`SpinFamily::validate`].
    pub fn check(&self) -> Result<()> {
        let report = self.validate();
        if report.passed() {
            Ok(())
        } else {
            let msg: Vec<String> = report.failures.iter().map(|f| f.to_string()).collect();
            Err(Error::InvalidFamily(format!("{}: {}", self.name(), msg.join("; "))))
        }
    }

    /// `phi(t)` and its derivatives up to `order` (at most 4).
    pub fn cgf(&self, t: f64, order: usize) -> Result<CgfEval> {
        if !t.is_finite() {
            return Err(Error::NonFinite(t));
        }
        if order > 4 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(CgfEval::from_array(self.derivatives(t), order))
    }

    /// Cumulant `P_k` for `k` in {2, 4}.
    pub fn cumulant(&self, k: usize) -> Result<f64> {
        match k {
            2 => Ok(self.moment(2)),
            4 => {
                let m2 = self.moment(2);
                Ok(self.moment(4) - 3.0 * m2 * m2)
            }
            _ => Err(Error::UnsupportedOrder(k)),
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        match self {
            SpinFamily::Rademacher => log_cosh(t),
            SpinFamily::Uniform => log_sinhc(SQRT3 * t)[0],
            _ => self.atom_derivatives(t, 0)[0],
        }
    }

    pub fn phi_prime(&self, t: f64) -> f64 {
        match self {
            SpinFamily::Rademacher => t.tanh(),
            SpinFamily::Uniform => SQRT3 * log_sinhc(SQRT3 * t)[1],
            _ => self.atom_derivatives(t, 1)[1],
        }
    }

    pub fn phi_second(&self, t: f64) -> f64 {
        match self {
            SpinFamily::Rademacher => {
                let c = t.cosh();
                if c.is_finite() {
                    1.0 / (c * c)
                } else {
                    0.0
                }
            }
            SpinFamily::Uniform => 3.0 * log_sinhc(SQRT3 * t)[2],
            _ => self.atom_derivatives(t, 2)[2],
        }
    }

    /// `[phi, phi', phi'', phi''', phi'''']` at `t`.
    pub fn derivatives(&self, t: f64) -> [f64; 5] {
        match self {
            SpinFamily::Rademacher => {
                let th = t.tanh();
                let s2 = 1.0 - th * th;
                [
                    log_cosh(t),
                    th,
                    s2,
                    -2.0 * th * s2,
                    -2.0 * s2 * s2 + 4.0 * th * th * s2,
                ]
            }
            SpinFamily::Uniform => {
                let g = log_sinhc(SQRT3 * t);
                [g[0], SQRT3 * g[1], 3.0 * g[2], 3.0 * SQRT3 * g[3], 9.0 * g[4]]
            }
            _ => self.atom_derivatives(t, 4),
        }
    }

    /// Solves `phi'(t) = m` for `|m| < hull`.
    pub fn inverse_phi_prime(&self, m: f64) -> Result<f64> {
        let hull = self.hull();
        if !(m.abs() < hull) {
            return Err(Error::OutsideHull { m, hull });
        }
        if m == 0.0 {
            return Ok(0.0);
        }
        if let SpinFamily::Rademacher = self {
            return Ok(m.atanh());
        }
        let target = m.abs();
        let mut hi = 1.0;
        while self.phi_prime(hi) < target {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::RootFinding(format!("phi' never reaches {target}")));
            }
        }
        let mut lo = 0.0;
        let mut t = 0.5 * hi;
        for _ in 0..200 {
            let r = self.phi_prime(t) - target;
            if r.abs() < 1e-15 || hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.phi_second(t);
            let newton = t - r / d;
            t = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        Ok(t.copysign(m))
    }

    /// Entropy rate `S(m) = -sup_t (t m - phi(t))`, with the boundary limit
    /// at `|m| = hull`.
    pub fn entropy(&self, m: f64) -> Result<f64> {
        let hull = self.hull();
        if !m.is_finite() {
            return Err(Error::NonFinite(m));
        }
        if m.abs() > hull * (1.0 + 1e-12) {
            return Err(Error::OutsideHull { m, hull });
        }
        if m.abs() >= hull {
            return Ok(match self.atoms() {
                Some(atoms) => atoms
                    .iter()
                    .filter(|(x, _)| (x.abs() - hull).abs() <= 1e-12 * hull && x.signum() == m.signum())
                    .map(|(_, p)| *p)
                    .sum::<f64>()
                    .ln(),
                None => f64::NEG_INFINITY,
            });
        }
        if let SpinFamily::Rademacher = self {
            let (p, q) = (0.5 * (1.0 + m), 0.5 * (1.0 - m));
            let xlogx = |x: f64| if x > 0.0 { x * (2.0 * x).ln() } else { 0.0 };
            return Ok(-(xlogx(p) + xlogx(q)));
        }
        let t = self.inverse_phi_prime(m)?;
        Ok(self.phi(t) - t * m)
    }

    /// Finite support as integer multiples of a common step:
    /// `(step, [(k, p)])` with `x = k * step`. `None` for the uniform law or
    /// when the support is not commensurate.
    pub fn lattice(&self) -> Option<(f64, Vec<(i64, f64)>)> {
        let atoms: Vec<(f64, f64)> = self.atoms()?.into_iter().filter(|(_, p)| *p > 0.0).collect();
        let nonzero: Vec<f64> = atoms.iter().map(|(x, _)| x.abs()).filter(|x| *x > 0.0).collect();
        let smallest = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
        if !smallest.is_finite() {
            return Some((1.0, vec![(0, 1.0)]));
        }
        // try step = smallest / d for small denominators
        for d in 1..=64 {
            let step = smallest / d as f64;
            let ks: Vec<f64> = atoms.iter().map(|(x, _)| x / step).collect();
            if ks.iter().all(|k| (k - k.round()).abs() < 1e-9) {
                return Some((
                    step,
                    atoms.iter().zip(&ks).map(|((_, p), k)| (k.round() as i64, *p)).collect(),
                ));
            }
        }
        None
    }

    fn atom_derivatives(&self, t: f64, order: usize) -> [f64; 5] {
        let atoms = self.atoms().unwrap_or_default();
        let logs: Vec<f64> = atoms
            .iter()
            .map(|&(x, p)| if p > 0.0 { p.ln() + t * x } else { f64::NEG_INFINITY })
            .collect();
        let lse = log_sum_exp(&logs);
        let mut out = [lse, 0.0, 0.0, 0.0, 0.0];
        if order == 0 {
            return out;
        }
        let probs: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
        let mean: f64 = atoms.iter().zip(&probs).map(|((x, _), p)| p * x).sum();
        out[1] = mean;
        if order == 1 {
            return out;
        }
        let (mut c2, mut c3, mut c4) = (0.0, 0.0, 0.0);
        for ((x, _), p) in atoms.iter().zip(&probs) {
            let d = x - mean;
            let d2 = d * d;
            c2 += p * d2;
            c3 += p * d2 * d;
            c4 += p * d2 * d2;
        }
        out[2] = c2;
        out[3] = c3;
        out[4] = c4 - 3.0 * c2 * c2;
        out
    }
}

/// `log(sinh x / x)` and its first four derivatives.
fn log_sinhc(x: f64) -> [f64; 5] {
    let a = x.abs();
    let s = x.signum();
    if a < 1.0 {
        let mut d = [0.0; 5];
        // sum c_j a^(2j) for j = 1..=21, differentiated term by term
        for (j, &c) in LOG_SINHC_SERIES.iter().enumerate().rev() {
            let k = 2 * (j + 1) as i32;
            // falling factorial k (k-1) ... times a^(k - order); skip vanishing terms
            let mut coef = c;
            for (order, slot) in d.iter_mut().enumerate() {
                let order = order as i32;
                if order > k {
                    break;
                }
                *slot += coef * a.powi(k - order);
                coef *= (k - order) as f64;
            }
        }
        return [d[0], s * d[1], d[2], s * d[3], d[4]];
    }
    let e = (-2.0 * a).exp();
    let one_minus = 1.0 - e;
    let coth = (1.0 + e) / one_minus;
    let csch2 = 4.0 * e / (one_minus * one_minus);
    let g0 = a + (-e).ln_1p() - std::f64::consts::LN_2 - a.ln();
    let g1 = coth - 1.0 / a;
    let g2 = 1.0 / (a * a) - csch2;
    let g3 = -2.0 / (a * a * a) + 2.0 * csch2 * coth;
    let g4 = 6.0 / (a * a * a * a) - 4.0 * csch2 * coth * coth - 2.0 * csch2 * csch2;
    [g0, s * g1, g2, s * g3, g4]
}
