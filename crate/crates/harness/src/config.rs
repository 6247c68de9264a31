use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Environment variable overriding the working precision in bits.
pub const PRECISION_ENV: &str = "STRAITLAB_PRECISION";

/// The only precision this build computes in: IEEE binary64.
pub const NATIVE_PRECISION: u32 = 53;

/// Everything an experiment reads. Serialized verbatim into the header of
/// every artifact, so two runs with equal configs write equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    /// Working precision in bits.
    pub precision: u32,
    pub tolerances: Tolerances,
    pub budgets: Budgets,
    pub fixtures: Fixtures,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Bound on the Misiurewicz residual `|z_{l+p} − z_l|`.
    pub certificate: f64,
    /// Largest accepted `|Q_m^{m+1}(0) − α(Q_m)|` against the ray landing.
    pub alpha_landing: f64,
    /// Potential at which parameter rays hand over to Newton.
    pub parameter_potential: f64,
    /// Periodic points count as repelling when `|μ| ≥ 1 + margin`.
    pub repelling_margin: f64,
    /// Allowed relative gap between the fitted and predicted exponents.
    pub holder_gap: f64,
    /// `|a − b|` accepted as equality in the identity self-test.
    pub identity: f64,
    /// Required `|g'(1/4)|`.
    pub derivative_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            certificate: 1e-9,
            alpha_landing: 1e-6,
            parameter_potential: 1e-6,
            repelling_margin: 0.01,
            holder_gap: 0.05,
            identity: 1e-8,
            derivative_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub m_min: usize,
    pub m_max: usize,
    pub n_values: Vec<usize>,
    pub newton_iters: usize,
    /// Points on the circle about `1/4` used by the geometric-limit check.
    pub test_points: usize,
    pub test_radius: f64,
    /// Depth of the ray chain that fixes the Lavaurs phase.
    pub phase_depth: usize,
    /// Range of the ray-landing samples for the Hölder fit.
    pub holder_k_min: usize,
    pub holder_k_max: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            m_min: 4,
            m_max: 10,
            n_values: vec![2, 3, 4],
            newton_iters: 100,
            test_points: 16,
            test_radius: 0.002,
            phase_depth: 12,
            holder_k_min: 4,
            holder_k_max: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fixtures {
    /// External angle of `α(Q)`; computed from `Q` when absent.
    pub theta: Option<String>,
    /// Degree of the captured fiber in the capture family.
    pub d1: u32,
    /// `capture-cubic` or `identity`.
    pub mismatch: String,
}

impl Default for Fixtures {
    fn default() -> Self {
        Fixtures { theta: None, d1: 2, mismatch: "capture-cubic".into() }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            seed: 0,
            precision: NATIVE_PRECISION,
            tolerances: Tolerances::default(),
            budgets: Budgets::default(),
            fixtures: Fixtures::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Apply `STRAITLAB_PRECISION` and reject precisions this build cannot
    /// honor.
    pub fn resolve_precision(&mut self, env: Option<&str>) -> Result<()> {
        if let Some(raw) = env {
            self.precision = raw
                .trim()
                .parse()
                .map_err(|_| HarnessError::Usage(format!("{PRECISION_ENV} must be a bit count, got {raw:?}")))?;
        }
        if self.precision != NATIVE_PRECISION {
            return Err(HarnessError::Domain(format!(
                "working precision of {} bits is unsupported: this build computes in binary64 ({NATIVE_PRECISION} bits)",
                self.precision
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if b.m_min == 0 && b.m_max == 0 {
            return Ok(());
        }
        if b.m_min > b.m_max {
            return Err(HarnessError::Usage(format!("m range {}..{} is empty", b.m_min, b.m_max)));
        }
        if b.holder_k_min >= b.holder_k_max {
            return Err(HarnessError::Usage("holder_k_min must be below holder_k_max".into()));
        }
        if self.fixtures.d1 < 2 {
            return Err(HarnessError::Usage("d1 must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_configs_fill_in_defaults() {
        let c = ExperimentConfig::from_json(r#"{"seed": 7, "budgets": {"m_max": 12}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.budgets.m_max, 12);
        assert_eq!(c.budgets.m_min, 4);
        assert_eq!(c.precision, 53);
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"sed": 7}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"budgets": {"m_maxx": 3}}"#).is_err());
    }

    #[test]
    fn precision_policy() {
        let mut c = ExperimentConfig::default();
        assert!(c.resolve_precision(None).is_ok());
        assert!(c.resolve_precision(Some("53")).is_ok());
        assert!(matches!(c.resolve_precision(Some("113")), Err(HarnessError::Domain(_))));
        assert!(matches!(c.resolve_precision(Some("lots")), Err(HarnessError::Usage(_))));
    }
}
