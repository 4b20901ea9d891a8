//! Model specification, Hamiltonian and the interaction-matrix factorisation.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spins::SpinFamily;

/// The full multipartite model.
///
/// ```
/// use multiferro::ModelSpec;
/// let spec: ModelSpec = serde_json::from_str(
///     r#"{"nu": 2, "alpha": [0.5, 0.5], "h": [0.0, 0.0], "beta": 4.0,
///         "families": [{"kind": "rademacher"}, {"kind": "rademacher"}]}"#,
/// ).unwrap();
/// spec.validate().unwrap();
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub nu: usize,
    pub alpha: Vec<f64>,
    pub h: Vec<f64>,
    pub beta: f64,
    pub families: Vec<SpinFamily>,
}

impl ModelSpec {
    /// `±1` spins in every party, zero field.
    pub fn rademacher(alpha: &[f64], beta: f64) -> Result<Self> {
        let spec = ModelSpec {
            nu: alpha.len(),
            alpha: alpha.to_vec(),
            h: vec![0.0; alpha.len()],
            beta,
            families: vec![SpinFamily::Rademacher; alpha.len()],
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same family in every party, zero field.
    pub fn homogeneous(alpha: &[f64], beta: f64, family: SpinFamily) -> Result<Self> {
        let spec = ModelSpec {
            nu: alpha.len(),
            alpha: alpha.to_vec(),
            h: vec![0.0; alpha.len()],
            beta,
            families: vec![family; alpha.len()],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ModelSpec { beta, ..self.clone() }
    }

    pub fn with_h(&self, h: &[f64]) -> Self {
        ModelSpec {
            h: h.to_vec(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu < 2 {
            return Err(Error::InvalidModel(format!("nu must be at least 2, got {}", self.nu)));
        }
        for (name, len) in [
            ("alpha", self.alpha.len()),
            ("h", self.h.len()),
            ("families", self.families.len()),
        ] {
            if len != self.nu {
                return Err(Error::InvalidModel(format!("{name} has {len} entries, nu = {}", self.nu)));
            }
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidModel(format!("alpha entries must lie in (0, 1), got {a}")));
        }
        let total: f64 = self.alpha.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("alpha must sum to 1, sums to {total}")));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidModel(format!("beta must be finite and non-negative, got {}", self.beta)));
        }
        if let Some(h) = self.h.iter().find(|h| !h.is_finite()) {
            return Err(Error::InvalidModel(format!("field {h} is not finite")));
        }
        for f in &self.families {
            f.check()?;
        }
        Ok(())
    }

    pub fn hulls(&self) -> Vec<f64> {
        self.families.iter().map(SpinFamily::hull).collect()
    }

    pub fn zero_field(&self) -> bool {
        self.h.iter().all(|h| *h == 0.0)
    }

    /// Effective field on party `a`: `beta * (h_a + sum_{b != a} alpha_b m_b)`.
    pub fn local_field(&self, m: &[f64], a: usize) -> f64 {
        let coupling: f64 = (0..self.nu).filter(|&b| b != a).map(|b| self.alpha[b] * m[b]).sum();
        self.beta * (self.h[a] + coupling)
    }
}

/// Partial magnetisations, one per party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MagnetisationVector(pub Vec<f64>);

impl MagnetisationVector {
    pub fn new(m: Vec<f64>) -> Self {
        MagnetisationVector(m)
    }

    /// Checks the length against `spec` and each entry against its hull.
    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        if self.0.len() != spec.nu {
            return Err(Error::DimensionMismatch {
                expected: spec.nu,
                got: self.0.len(),
            });
        }
        for (m, f) in self.0.iter().zip(&spec.families) {
            let hull = f.hull();
            if !m.is_finite() || m.abs() > hull * (1.0 + 1e-12) {
                return Err(Error::OutsideHull { m: *m, hull });
            }
        }
        Ok(())
    }
}

impl std::ops::Deref for MagnetisationVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for MagnetisationVector {
    fn from(m: Vec<f64>) -> Self {
        MagnetisationVector(m)
    }
}

/// Energy of a configuration with magnetisations `m` and `n` spins in total,
/// summing the coupling over unordered pairs of parties.
pub fn hamiltonian(spec: &ModelSpec, m: &MagnetisationVector, n: usize) -> Result<f64> {
    m.check(spec)?;
    if n < spec.nu {
        return Err(Error::InvalidModel(format!("need at least nu = {} spins, got {n}", spec.nu)));
    }
    let nf = n as f64;
    let mut pair = 0.0;
    for a in 0..spec.nu {
        for b in a + 1..spec.nu {
            pair += spec.alpha[a] * spec.alpha[b] * m[a] * m[b];
        }
    }
    let field: f64 = (0..spec.nu).map(|a| spec.h[a] * spec.alpha[a] * m[a]).sum();
    Ok(-nf * pair - nf * field)
}

/// `J`, its completion `Jc = c diag(alpha^2) - J`, `Tc = (c + 1) I - 1 1^T`,
/// and the factor `P` with `P^T P = Jc`.
#[derive(Clone, Debug)]
pub struct InteractionDecomposition {
    pub c: f64,
    pub j: DMatrix<f64>,
    pub jc: DMatrix<f64>,
    pub tc: DMatrix<f64>,
    /// Rows are the vectors `v^a = A w^a`.
    pub p: DMatrix<f64>,
    /// Eigenvalues of `Tc`, ascending.
    pub tc_eigenvalues: Vec<f64>,
}

/// Symmetric coupling matrix: `alpha_a alpha_b` off the diagonal, zero on it.
pub fn coupling_matrix(alpha: &[f64]) -> DMatrix<f64> {
    let n = alpha.len();
    DMatrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { alpha[a] * alpha[b] })
}

/// Rows of the Helmert-type basis scaled so that `W^T W = Tc`.
fn helmert_rows(nu: usize, c: f64) -> DMatrix<f64> {
    let nuf = nu as f64;
    DMatrix::from_fn(nu, nu, |row, col| {
        if row == 0 {
            ((c + 1.0 - nuf) / nuf).max(0.0).sqrt()
        } else {
            let a = (row + 1) as f64;
            let scale = ((c + 1.0) / (a * (a - 1.0))).sqrt();
            if col < row {
                scale
            } else if col == row {
                scale * (1.0 - a)
            } else {
                0.0
            }
        }
    })
}

pub fn interaction_matrices(spec: &ModelSpec, c: f64) -> Result<InteractionDecomposition> {
    spec.validate()?;
    let nu = spec.nu;
    let min = (nu - 1) as f64;
    if !(c >= min) {
        return Err(Error::CounterTermTooSmall { c, min });
    }
    let alpha = &spec.alpha;
    let j = coupling_matrix(alpha);
    let jc = DMatrix::from_fn(nu, nu, |a, b| if a == b { c * alpha[a] * alpha[a] } else { -j[(a, b)] });
    let tc = DMatrix::from_fn(nu, nu, |a, b| if a == b { c } else { -1.0 });
    let a_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(alpha));
    let p = helmert_rows(nu, c) * a_diag;
    let mut tc_eigenvalues: Vec<f64> = SymmetricEigen::new(tc.clone()).eigenvalues.iter().copied().collect();
    tc_eigenvalues.sort_by(f64::total_cmp);
    Ok(InteractionDecomposition {
        c,
        j,
        jc,
        tc,
        p,
        tc_eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_alpha(rng: &mut ChaCha8Rng, nu: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..nu).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut a: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let rest: f64 = a[1..].iter().sum();
        a[0] = 1.0 - rest;
        a
    }

    #[test]
    fn hamiltonian_examples() {
        let bip = ModelSpec::rademacher(&[0.5, 0.5], 1.0).unwrap();
        let e = hamiltonian(&bip, &vec![1.0, 1.0].into(), 4).unwrap();
        assert!((e + 1.0).abs() < 1e-15);
        let third = 1.0 / 3.0;
        let tri = ModelSpec::rademacher(&[third, third, 1.0 - 2.0 * third], 1.0).unwrap();
        let e = hamiltonian(&tri, &vec![1.0, 1.0, 1.0].into(), 3).unwrap();
        assert!((e + 1.0).abs() < 1e-14);
        let tilted = bip.with_h(&[1.0, 0.0]);
        let e = hamiltonian(&tilted, &vec![1.0, -1.0].into(), 2).unwrap();
        assert!((e + 0.5).abs() < 1e-15);
        assert!(matches!(
            hamiltonian(&bip, &vec![1.0].into(), 4),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hamiltonian_flip_symmetric_without_field() {
        let spec = ModelSpec::rademacher(&[0.2, 0.3, 0.5], 1.0).unwrap();
        let m = vec![0.3, -0.7, 0.1];
        let flipped: Vec<f64> = m.iter().map(|x| -x).collect();
        let a = hamiltonian(&spec, &m.into(), 10).unwrap();
        let b = hamiltonian(&spec, &flipped.into(), 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bipartite_decomposition() {
        let spec = ModelSpec::rademacher(&[0.5, 0.5], 1.0).unwrap();
        let d = interaction_matrices(&spec, 2.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.25, -0.25, 0.5]);
        assert!((&d.jc - expected).amax() < 1e-14);
        assert!((d.tc_eigenvalues[0] - 1.0).abs() < 1e-12 && (d.tc_eigenvalues[1] - 3.0).abs() < 1e-12);

        let d = interaction_matrices(&spec, 1.0).unwrap();
        assert!(d.tc_eigenvalues[0].abs() < 1e-12 && (d.tc_eigenvalues[1] - 2.0).abs() < 1e-12);
        assert_eq!(d.p.rank(1e-12), 1);

        assert!(matches!(
            interaction_matrices(&spec, 0.9),
            Err(Error::CounterTermTooSmall { .. })
        ));
    }

    #[test]
    fn factorisation_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let nu = rng.random_range(2..=5);
            let alpha = random_alpha(&mut rng, nu);
            let c = (nu - 1) as f64 + rng.random_range(0.0..3.0);
            let spec = ModelSpec::rademacher(&alpha, 1.0).unwrap();
            let d = interaction_matrices(&spec, c).unwrap();
            let jc_direct = DMatrix::from_fn(nu, nu, |a, b| {
                if a == b {
                    c * alpha[a] * alpha[a]
                } else {
                    -alpha[a] * alpha[b]
                }
            });
            assert!((&d.jc - &jc_direct).amax() < 1e-14);
            assert!((d.p.transpose() * &d.p - &d.jc).amax() < 1e-12);
            assert!((d.tc_eigenvalues[0] - (c + 1.0 - nu as f64)).abs() < 1e-10);
            for ev in &d.tc_eigenvalues[1..] {
                assert!((ev - (c + 1.0)).abs() < 1e-10);
            }
            let jc_min = SymmetricEigen::new(d.jc.clone()).eigenvalues.min();
            assert!(jc_min > -1e-12);
        }
    }

    #[test]
    fn bare_coupling_is_indefinite() {
        for nu in 2..=6 {
            let alpha = vec![1.0 / nu as f64; nu];
            let ev = SymmetricEigen::new(coupling_matrix(&alpha)).eigenvalues;
            assert!(ev.min() < 0.0 && ev.max() > 0.0);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::rademacher(&[0.5, 0.6], 1.0).is_err());
        assert!(ModelSpec::rademacher(&[1.0], 1.0).is_err());
        assert!(ModelSpec::rademacher(&[0.5, 0.5], -1.0).is_err());
        let bad = r#"{"nu":2,"alpha":[0.5,0.5],"h":[0,0],"beta":1,"families":[{"kind":"rademacher"},{"kind":"rademacher"}],"extra":3}"#;
        assert!(serde_json::from_str::<ModelSpec>(bad).is_err());
    }
}
