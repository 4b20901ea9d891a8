//! One-party generalised ferromagnets with Hamiltonian `-N u(m)`.
//!
//! The pressure of such a model is a one-dimensional maximum principle over
//! the magnetisation. The same routine evaluates the tilted Curie-Weiss
//! pressure `A_CW` used by the multipartite variational formula, via the
//! quadratic energy `u(x) = x^2 / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dist_inf, log_add_exp, scan_roots};
use crate::spins::SpinFamily;

const SCAN_POINTS: usize = 2048;

/// Energy per spin as a function of the magnetisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyFunction {
    /// `u(x) = curvature * x^2 / 2`.
    Quadratic { curvature: f64 },
    /// `u(x) = prefactor * phi(scale * x + shift)`.
    ScaledCgf {
        family: SpinFamily,
        prefactor: f64,
        scale: f64,
        shift: f64,
    },
    /// `u(x) = phi(x)`.
    Duality { family: SpinFamily },
}

impl EnergyFunction {
    pub fn quadratic() -> Self {
        EnergyFunction::Quadratic { curvature: 1.0 }
    }

    /// `[u, u', u'', u''', u'''']` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 5] {
        match self {
            EnergyFunction::Quadratic { curvature } => [0.5 * curvature * x * x, curvature * x, *curvature, 0.0, 0.0],
            EnergyFunction::Duality { family } => family.derivatives(x),
            EnergyFunction::ScaledCgf {
                family,
                prefactor,
                scale,
                shift,
            } => {
                let d = family.derivatives(scale * x + shift);
                let mut out = [0.0; 5];
                let mut s = 1.0;
                for k in 0..5 {
                    out[k] = prefactor * s * d[k];
                    s *= scale;
                }
                out
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    pub fn first(&self, x: f64) -> f64 {
        match self {
            EnergyFunction::Quadratic { curvature } => curvature * x,
            EnergyFunction::Duality { family } => family.phi_prime(x),
            EnergyFunction::ScaledCgf {
                family,
                prefactor,
                scale,
                shift,
            } => prefactor * scale * family.phi_prime(scale * x + shift),
        }
    }

    pub fn second(&self, x: f64) -> f64 {
        match self {
            EnergyFunction::Quadratic { curvature } => *curvature,
            EnergyFunction::Duality { family } => family.phi_second(x),
            EnergyFunction::ScaledCgf {
                family,
                prefactor,
                scale,
                shift,
            } => prefactor * scale * scale * family.phi_second(scale * x + shift),
        }
    }

    /// Whether `u` is even. Shifted compositions are not.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, EnergyFunction::ScaledCgf { shift, .. } if *shift != 0.0)
    }

    /// Symmetry, `u(0) = 0`, positive curvature and `u(x) <= u''(0) x^2 / 2`
    /// on the grid `xs`.
    pub fn check_on_grid(&self, xs: &[f64]) -> Result<()> {
        if !self.is_symmetric() {
            return Err(Error::Precondition("energy with a shift is not symmetric".into()));
        }
        let c0 = self.second(0.0);
        if self.value(0.0).abs() > 1e-15 {
            return Err(Error::Precondition(format!("u(0) = {}", self.value(0.0))));
        }
        for &x in xs {
            let d = self.derivatives(x);
            if (d[0] - self.value(-x)).abs() > 1e-12 * d[0].abs().max(1.0) {
                return Err(Error::Precondition(format!("u not even at {x}")));
            }
            if !(d[2] > 0.0) {
                return Err(Error::Precondition(format!("u''({x}) = {} is not positive", d[2])));
            }
            if d[0] > 0.5 * c0 * x * x * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::Precondition(format!("u({x}) exceeds u''(0) x^2 / 2")));
            }
        }
        Ok(())
    }
}

/// Solution of the one-party maximum principle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfState {
    pub pressure: f64,
    pub m: f64,
    /// `true` when `-m` is an equally good maximiser (zero field, ordered phase).
    pub symmetric_pair: bool,
    /// Every root of the self-consistency equation found, ascending.
    pub roots: Vec<f64>,
}

fn gf_objective(u: &EnergyFunction, family: &SpinFamily, beta: f64, h: f64, m: f64) -> f64 {
    let d = u.derivatives(m);
    beta * (d[0] - d[1] * m) + family.phi(beta * d[1] + h)
}

/// Pressure `max_M [beta (u(M) - u'(M) M) + phi(beta u'(M) + h)]`, maximised
/// over the roots of `M = phi'(beta u'(M) + h)`.
///
/// ```
/// use multiferro::genferro::{gf_pressure, EnergyFunction};
/// use multiferro::SpinFamily;
/// let s = gf_pressure(&EnergyFunction::quadratic(), &SpinFamily::Rademacher, 2.0, 0.0).unwrap();
/// assert!((s.m - 0.957504).abs() < 1e-6);
/// assert!((s.pressure - 0.326524).abs() < 1e-6);
/// ```
pub fn gf_pressure(u: &EnergyFunction, family: &SpinFamily, beta: f64, h: f64) -> Result<GfState> {
    for v in [beta, h] {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
    }
    let hull = family.hull();
    let residual = |m: f64| m - family.phi_prime(beta * u.first(m) + h);
    let mut roots = scan_roots(residual, -hull, hull, SCAN_POINTS, 1e-15);
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if roots.is_empty() {
        return Err(Error::RootFinding(format!(
            "no magnetisation solves the self-consistency equation at beta={beta}, h={h}"
        )));
    }
    let values: Vec<f64> = roots.iter().map(|&m| gf_objective(u, family, beta, h, m)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-13 * best.abs().max(1.0);
    // prefer the positive branch among (near-)equal maxima
    let idx = (0..roots.len())
        .rev()
        .find(|&i| values[i] >= best - tie)
        .expect("non-empty");
    let m = roots[idx];
    let symmetric_pair =
        m > 1e-9 && u.is_symmetric() && h == 0.0 && roots.iter().any(|r| (r + m).abs() < 1e-9);
    Ok(GfState {
        pressure: values[idx],
        m,
        symmetric_pair,
        roots,
    })
}

/// Tilted Curie-Weiss pressure `max_M [-b M^2 / 2 + phi(b M + y)]`.
pub fn curie_weiss_pressure(family: &SpinFamily, b: f64, y: f64) -> Result<GfState> {
    gf_pressure(&EnergyFunction::quadratic(), family, b, y)
}

pub fn gf_critical_beta(u: &EnergyFunction) -> Result<f64> {
    let c = u.second(0.0);
    if !(c > 0.0) {
        return Err(Error::Precondition(format!("u''(0) = {c} must be positive")));
    }
    Ok(1.0 / c)
}

/// Susceptibility `V / (1 - beta u''(M) V)` with `V` the tilted spin variance.
pub fn gf_susceptibility(u: &EnergyFunction, family: &SpinFamily, beta: f64, h: f64) -> Result<f64> {
    let state = gf_pressure(u, family, beta, h)?;
    let v = family.phi_second(beta * u.first(state.m) + h);
    let denom = 1.0 - beta * u.second(state.m) * v;
    if denom < 1e-12 {
        return Err(Error::Divergence(denom));
    }
    Ok(v / denom)
}

/// Law whose Laplace transform is `exp(beta u)`, and the law of
/// `N^{-1/2} (xi_1 + ... + xi_N)` for i.i.d. draws from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateMeasure {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
    pub n: usize,
    pub scaled_support: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

impl ConjugateMeasure {
    /// `log sum_k w_k exp(x s_k)`.
    pub fn log_laplace(&self, x: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .fold(f64::NEG_INFINITY, |acc, (s, w)| log_add_exp(acc, w.ln() + x * s))
    }

    pub fn scaled_variance(&self) -> f64 {
        let mean: f64 = self.scaled_support.iter().zip(&self.scaled_weights).map(|(x, w)| x * w).sum();
        self.scaled_support
            .iter()
            .zip(&self.scaled_weights)
            .map(|(x, w)| w * (x - mean).powi(2))
            .sum()
    }
}

/// Log-probabilities of the sum of `n` i.i.d. lattice variables with atoms
/// `(k, p)`; entry `j` corresponds to the lattice value `n * kmin + j`.
pub fn lattice_sum_log_probs(atoms: &[(i64, f64)], n: usize) -> (i64, Vec<f64>) {
    let kmin = atoms.iter().map(|(k, _)| *k).min().unwrap_or(0);
    let kmax = atoms.iter().map(|(k, _)| *k).max().unwrap_or(0);
    let width = (kmax - kmin) as usize;
    let logs: Vec<(usize, f64)> = atoms
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(k, p)| ((k - kmin) as usize, p.ln()))
        .collect();
    let mut cur = vec![0.0];
    for _ in 0..n {
        let mut next = vec![f64::NEG_INFINITY; cur.len() + width];
        for (j, &lc) in cur.iter().enumerate() {
            if lc == f64::NEG_INFINITY {
                continue;
            }
            for &(off, lp) in &logs {
                next[j + off] = log_add_exp(next[j + off], lc + lp);
            }
        }
        cur = next;
    }
    (n as i64 * kmin, cur)
}

fn constructive_parts(u: &EnergyFunction, beta: f64) -> Result<(SpinFamily, f64, usize)> {
    let (family, k, s) = match u {
        EnergyFunction::Duality { family } => (family.clone(), 1.0, 1.0),
        EnergyFunction::ScaledCgf {
            family,
            prefactor,
            scale,
            shift,
        } if *shift == 0.0 => (family.clone(), *prefactor, *scale),
        _ => {
            return Err(Error::OutOfScope(
                "conjugate measure is only constructed when beta*u is an integer multiple of a spin cumulant \
                 generating function; general Bernstein inversion is out of scope"
                    .into(),
            ))
        }
    };
    let n = beta * k;
    let rounded = n.round();
    if !(rounded >= 1.0 && (n - rounded).abs() < 1e-12) {
        return Err(Error::OutOfScope(format!(
            "beta * prefactor = {n} is not a positive integer; general Bernstein inversion is out of scope"
        )));
    }
    Ok((family, s, rounded as usize))
}

pub fn conjugate_measure(u: &EnergyFunction, beta: f64, n_sample: usize) -> Result<ConjugateMeasure> {
    let (family, scale, n) = constructive_parts(u, beta)?;
    let (step, atoms) = family
        .lattice()
        .ok_or_else(|| Error::OutOfScope(format!("{} has no lattice support", family.name())))?;
    let (base, logs) = lattice_sum_log_probs(&atoms, n);
    let atoms_of = |base: i64, logs: &[f64], norm: f64| -> (Vec<f64>, Vec<f64>) {
        logs.iter()
            .enumerate()
            .filter(|(_, l)| **l > f64::NEG_INFINITY)
            .map(|(j, l)| (scale * step * (base + j as i64) as f64 / norm, l.exp()))
            .unzip()
    };
    let (support, weights) = atoms_of(base, &logs, 1.0);
    let (base_n, logs_n) = lattice_sum_log_probs(&atoms, n * n_sample.max(1));
    let (scaled_support, scaled_weights) = atoms_of(base_n, &logs_n, (n_sample.max(1) as f64).sqrt());
    Ok(ConjugateMeasure {
        support,
        weights,
        n: n_sample,
        scaled_support,
        scaled_weights,
    })
}

/// Fourth cumulant of the conjugate law, `beta * u''''(0)`.
pub fn quartic_cumulant_u(u: &EnergyFunction, beta: f64) -> f64 {
    beta * u.derivatives(0.0)[4]
}

/// Largest deviation between `exp(beta u(x))` and the conjugate Laplace
/// transform on `xs`.
pub fn laplace_residual(u: &EnergyFunction, beta: f64, measure: &ConjugateMeasure, xs: &[f64]) -> f64 {
    let lhs: Vec<f64> = xs.iter().map(|&x| (beta * u.value(x)).exp()).collect();
    let rhs: Vec<f64> = xs.iter().map(|&x| measure.log_laplace(x).exp()).collect();
    dist_inf(&lhs, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (-40..=40).map(|i| i as f64 * 0.1).collect()
    }

    #[test]
    fn pressure_examples() {
        let q = EnergyFunction::quadratic();
        let s = gf_pressure(&q, &SpinFamily::Rademacher, 0.0, 1.0).unwrap();
        assert!((s.pressure - 0.433_780_830_483_027).abs() < 1e-12);
        assert!((s.m - 1f64.tanh()).abs() < 1e-12);

        let s = gf_pressure(&q, &SpinFamily::Rademacher, 2.0, 0.0).unwrap();
        // M = tanh(2M), A = -M^2 + log cosh(2M)
        assert!((s.m - 0.957_504_024_077_268_8).abs() < 1e-12, "{}", s.m);
        assert!((s.pressure - 0.326_523_887_426_923_8).abs() < 1e-12);
        assert!((s.pressure - 0.32648).abs() < 1e-4);
        assert!(s.symmetric_pair);
        assert_eq!(s.roots.len(), 3);

        let s = gf_pressure(&q, &SpinFamily::Rademacher, 0.5, 0.0).unwrap();
        assert_eq!(s.roots, vec![0.0]);
        assert_eq!(s.pressure, 0.0);
    }

    #[test]
    fn maximiser_matches_dense_scan() {
        for fam in [SpinFamily::Rademacher, SpinFamily::Uniform, SpinFamily::three_point(0.4)] {
            let u = EnergyFunction::ScaledCgf {
                family: SpinFamily::Rademacher,
                prefactor: 1.0,
                scale: 1.3,
                shift: 0.0,
            };
            for &(beta, h) in &[(0.3, 0.2), (1.7, -0.05), (2.5, 0.4)] {
                let s = gf_pressure(&u, &fam, beta, h).unwrap();
                let hull = fam.hull();
                let n = 400_000;
                let (mut bm, mut bv) = (0.0, f64::NEG_INFINITY);
                for i in 1..n {
                    let m = -hull + 2.0 * hull * i as f64 / n as f64;
                    let v = gf_objective(&u, &fam, beta, h, m);
                    if v > bv {
                        bv = v;
                        bm = m;
                    }
                }
                assert!((s.m - bm).abs() < 2e-5, "{} {beta} {h}: {} vs {bm}", fam.name(), s.m);
                assert!(s.pressure >= bv - 1e-12);
                assert!(s.pressure - bv < 1e-9);
                let r = s.m - fam.phi_prime(beta * u.first(s.m) + h);
                assert!(r.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn critical_beta_from_curvature() {
        assert_eq!(gf_critical_beta(&EnergyFunction::quadratic()).unwrap(), 1.0);
        assert_eq!(gf_critical_beta(&EnergyFunction::Quadratic { curvature: 2.0 }).unwrap(), 0.5);
        // bipartite duality: u(x) = phi(sqrt(a(1-a)) beta x) is critical at unit temperature
        let a: f64 = 0.25;
        let beta_c = 1.0 / (a * (1.0 - a)).sqrt();
        let u = EnergyFunction::ScaledCgf {
            family: SpinFamily::Rademacher,
            prefactor: 1.0,
            scale: (a * (1.0 - a)).sqrt() * beta_c,
            shift: 0.0,
        };
        assert!((gf_critical_beta(&u).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn susceptibility() {
        let q = EnergyFunction::quadratic();
        let r = SpinFamily::Rademacher;
        assert_eq!(gf_susceptibility(&q, &r, 0.0, 0.0).unwrap(), 1.0);
        assert!((gf_susceptibility(&q, &r, 0.5, 0.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(gf_susceptibility(&q, &r, 1.0 - 5e-7, 0.0).unwrap() > 1e6);
        assert!(matches!(gf_susceptibility(&q, &r, 1.0, 0.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn energy_invariants() {
        for u in [
            EnergyFunction::quadratic(),
            EnergyFunction::Duality {
                family: SpinFamily::Uniform,
            },
            EnergyFunction::ScaledCgf {
                family: SpinFamily::three_point(0.5),
                prefactor: 2.0,
                scale: 0.7,
                shift: 0.0,
            },
        ] {
            u.check_on_grid(&grid()).unwrap();
        }
    }

    #[test]
    fn conjugate_of_two_spins() {
        let u = EnergyFunction::Duality {
            family: SpinFamily::Rademacher,
        };
        let c = conjugate_measure(&u, 2.0, 1).unwrap();
        assert_eq!(c.support, vec![-2.0, 0.0, 2.0]);
        for (w, e) in c.weights.iter().zip([0.25, 0.5, 0.25]) {
            assert!((w - e).abs() < 1e-15);
        }
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        assert!(laplace_residual(&u, 2.0, &c, &xs) < 1e-10);

        let one = conjugate_measure(&u, 1.0, 1).unwrap();
        assert_eq!(one.support, vec![-1.0, 1.0]);

        let three = EnergyFunction::ScaledCgf {
            family: SpinFamily::three_point(0.5),
            prefactor: 1.5,
            scale: 0.8,
            shift: 0.0,
        };
        let c = conjugate_measure(&three, 2.0, 1).unwrap();
        assert!(laplace_residual(&three, 2.0, &c, &xs) < 1e-10);
    }

    #[test]
    fn conjugate_scaled_variance_approaches_curvature() {
        let u = EnergyFunction::Duality {
            family: SpinFamily::Rademacher,
        };
        for n in [1, 10, 200] {
            let c = conjugate_measure(&u, 3.0, n).unwrap();
            assert!((c.scaled_variance() - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_constructive_cases_refused() {
        let err = conjugate_measure(&EnergyFunction::quadratic(), 1.0, 1).unwrap_err();
        assert!(err.to_string().contains("Bernstein"));
        let u = EnergyFunction::Duality {
            family: SpinFamily::Rademacher,
        };
        assert!(conjugate_measure(&u, 1.5, 1).unwrap_err().to_string().contains("Bernstein"));
    }

    #[test]
    fn quartic_cumulants() {
        let dual = |family| EnergyFunction::Duality { family };
        assert!((quartic_cumulant_u(&dual(SpinFamily::Rademacher), 1.0) + 2.0).abs() < 1e-14);
        assert!((quartic_cumulant_u(&dual(SpinFamily::Rademacher), 3.0) + 6.0).abs() < 1e-14);
        assert_eq!(quartic_cumulant_u(&EnergyFunction::quadratic(), 2.0), 0.0);
        // from the convolved law's own cumulants
        let c = conjugate_measure(&dual(SpinFamily::Rademacher), 3.0, 1).unwrap();
        let m2: f64 = c.support.iter().zip(&c.weights).map(|(x, w)| w * x * x).sum();
        let m4: f64 = c.support.iter().zip(&c.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 3.0 * m2 * m2 + 6.0).abs() < 1e-12);
    }
}
