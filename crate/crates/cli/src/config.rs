use std::path::Path;

use multiferro::{ModelSpec, SpinFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Experiment parameters read from `--config`, then overridden by flags.
/// Every field is optional in the file; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: Option<ModelSpec>,
    /// Counterterm for the variational pressure; `nu` when absent.
    pub c: Option<f64>,
    pub starts: Option<usize>,
    pub per_axis: Option<usize>,
    /// Agreement tolerance for the pressure cross-checks.
    pub tol: Option<f64>,
    pub h2_max: Option<f64>,
    pub h2_points: Option<usize>,
    pub h2_values: Option<Vec<f64>>,
    pub profile_points: Option<usize>,
    pub intersection_range: Option<f64>,
    pub intersection_grid: Option<usize>,
    /// Points per axis of the tripartite critical surface.
    pub surface_points: Option<usize>,
    /// Per-party sizes for the fluctuation suite.
    pub sizes: Option<Vec<usize>>,
    pub criteria: Option<Vec<u8>>,
}

/// Model overrides given on the command line.
#[derive(Clone, Debug, Default)]
pub struct ModelFlags {
    pub nu: Option<usize>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub h: Option<Vec<f64>>,
    pub family: Option<SpinFamily>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies flag overrides and fills in a default model when none is given.
    pub fn resolve(mut self, flags: &ModelFlags, tol: Option<f64>) -> Result<Self, CliError> {
        let mut spec = match self.model.take() {
            Some(s) => s,
            None => {
                let alpha = match (&flags.alpha, flags.nu) {
                    (Some(a), _) => a.clone(),
                    (None, Some(nu)) if nu >= 2 => vec![1.0 / nu as f64; nu],
                    (None, Some(nu)) => return Err(CliError::Config(format!("nu must be at least 2, got {nu}"))),
                    (None, None) => vec![0.5, 0.5],
                };
                ModelSpec {
                    nu: alpha.len(),
                    h: vec![0.0; alpha.len()],
                    alpha,
                    beta: 1.0,
                    families: vec![],
                }
            }
        };
        if let Some(a) = &flags.alpha {
            spec.nu = a.len();
            spec.alpha = a.clone();
        }
        if let Some(nu) = flags.nu {
            if nu != spec.nu {
                return Err(CliError::Config(format!("--nu {nu} does not match {} fractions", spec.nu)));
            }
        }
        if let Some(b) = flags.beta {
            spec.beta = b;
        }
        if let Some(h) = &flags.h {
            spec.h = h.clone();
        }
        if spec.h.len() != spec.nu {
            spec.h = vec![0.0; spec.nu];
        }
        if let Some(f) = &flags.family {
            spec.families = vec![f.clone(); spec.nu];
        }
        if spec.families.is_empty() {
            spec.families = vec![SpinFamily::Rademacher; spec.nu];
        }
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.model = Some(spec);
        if tol.is_some() {
            self.tol = tol;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(self)
    }

    pub fn spec(&self) -> &ModelSpec {
        self.model.as_ref().expect("resolved config has a model")
    }

    /// SHA-256 of the resolved config in canonical JSON.
    pub fn hash(&self, command: &str) -> String {
        let body = serde_json::to_string(self).expect("config serialises");
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect()
}

pub fn parse_family(s: &str) -> Result<SpinFamily, String> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    match s {
        "rademacher" => Ok(SpinFamily::Rademacher),
        "uniform" => Ok(SpinFamily::Uniform),
        _ => match s.strip_prefix("three_point:") {
            Some(q) => {
                let q: f64 = q.parse().map_err(|e| format!("{q:?}: {e}"))?;
                let f = SpinFamily::three_point(q);
                f.check().map_err(|e| e.to_string())?;
                Ok(f)
            }
            None => Err(format!("unknown family {s:?}; use rademacher, uniform, three_point:<q> or JSON")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"h2_points": 5}"#).is_ok());
    }

    #[test]
    fn flags_override_model() {
        let flags = ModelFlags {
            alpha: Some(vec![0.3, 0.7]),
            beta: Some(2.0),
            ..Default::default()
        };
        let c = ExperimentConfig::default().resolve(&flags, None).unwrap();
        assert_eq!(c.spec().alpha, vec![0.3, 0.7]);
        assert_eq!(c.spec().beta, 2.0);
        let bad = ModelFlags {
            alpha: Some(vec![0.3, 0.6]),
            ..Default::default()
        };
        assert!(ExperimentConfig::default().resolve(&bad, None).is_err());
    }

    #[test]
    fn hash_depends_on_command_and_content() {
        let c = ExperimentConfig::default().resolve(&ModelFlags::default(), None).unwrap();
        assert_eq!(c.hash("solve"), c.hash("solve"));
        assert_ne!(c.hash("solve"), c.hash("pressure"));
        assert_eq!(c.hash("solve").len(), 64);
    }

    #[test]
    fn family_flags() {
        assert_eq!(parse_family("rademacher").unwrap(), SpinFamily::Rademacher);
        assert!(parse_family("three_point:0.5").is_ok());
        assert!(parse_family("three_point:0.9").is_err());
        assert!(parse_family("gauss").is_err());
    }
}
