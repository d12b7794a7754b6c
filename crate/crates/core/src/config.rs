//! Experiment configuration, read from TOML or JSON.
//!
//! ```toml
//! name = "u01sq"
//! compare = ["oracle"]
//!
//! [distribution]
//! kind = "uniform_rect"
//! c1 = 1.0
//! c2 = 1.0
//!
//! [train]
//! k = 10
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::buyer::ValuationKind;
use crate::distribution::DistributionSpec;
use crate::duality;
use crate::error::{Error, Result};
use crate::oracles;
use crate::trainer::{MechanismMode, TrainConfig};

/// Largest grid resolution the LP baseline accepts.
pub const MAX_LP_N: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Oracle,
    Lp,
    Duality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSettings {
    /// Grid resolution of the LP.
    #[serde(default = "default_lp_n")]
    pub n: usize,
    /// When set, the trained menu is refined on the LP grid with this
    /// schedule (starting from the trained parameters) before comparing.
    #[serde(default)]
    pub refine: Option<TrainConfig>,
}

fn default_lp_n() -> usize {
    10
}

impl Default for LpSettings {
    fn default() -> Self {
        Self {
            n: default_lp_n(),
            refine: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSettings {
    /// Resolutions run by both the trainer and the LP.
    #[serde(default = "default_shared")]
    pub shared: Vec<usize>,
    /// Resolutions run by the trainer only.
    #[serde(default = "default_trainer_only")]
    pub trainer_only: Vec<usize>,
}

fn default_shared() -> Vec<usize> {
    vec![10, 15, 20, 25, 30]
}

fn default_trainer_only() -> Vec<usize> {
    vec![50, 100]
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            shared: default_shared(),
            trainer_only: default_trainer_only(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySettings {
    #[serde(default = "default_quad_n")]
    pub quad_n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_quad_n() -> usize {
    duality::DEFAULT_QUAD_N
}

fn default_tol() -> f64 {
    duality::DEFAULT_TOL
}

impl Default for CertifySettings {
    fn default() -> Self {
        Self {
            quad_n: default_quad_n(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub valuation: ValuationKind,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub compare: Vec<Comparison>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub lp: LpSettings,
    #[serde(default)]
    pub bench: BenchSettings,
    #[serde(default)]
    pub certify: CertifySettings,
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn mode(&self) -> MechanismMode {
        self.train.mode
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.distribution.label())
    }

    /// Checks every section; errors name the offending field by its path.
    pub fn validate(&self) -> Result<()> {
        let prefixed = |section: &str, e: Error| match e {
            Error::InvalidArgument { field, reason } => Error::Config(format!("{section}.{field}: {reason}")),
            other => Error::Config(format!("{section}: {other}")),
        };
        self.distribution.validate().map_err(|e| prefixed("distribution", e))?;
        self.train.validate().map_err(|e| prefixed("train", e))?;
        let mode_ok = matches!(
            (self.valuation, self.train.mode),
            (ValuationKind::UnitDemand, MechanismMode::UnitDemand)
                | (ValuationKind::Additive | ValuationKind::Combinatorial, MechanismMode::Free)
                | (ValuationKind::Additive | ValuationKind::Combinatorial, MechanismMode::DeterministicPricesOnly)
        );
        if !mode_ok {
            return Err(Error::Config(format!(
                "train.mode: {:?} does not fit valuation {:?}",
                self.train.mode, self.valuation
            )));
        }
        if self.lp.n == 0 || self.lp.n > MAX_LP_N {
            return Err(Error::Config(format!("lp.n: must lie in 1..={MAX_LP_N}")));
        }
        if let Some(refine) = &self.lp.refine {
            refine.validate().map_err(|e| prefixed("lp.refine", e))?;
            if refine.k != self.train.k || refine.mode != self.train.mode {
                return Err(Error::Config("lp.refine: k and mode must match train".into()));
            }
        }
        if let Some(&n) = self.bench.shared.iter().find(|&&n| n == 0 || n > MAX_LP_N) {
            return Err(Error::Config(format!("bench.shared: {n} outside 1..={MAX_LP_N}")));
        }
        if self.bench.trainer_only.contains(&0) {
            return Err(Error::Config("bench.trainer_only: resolutions must be positive".into()));
        }
        if self.certify.quad_n < 2 || !(self.certify.tol > 0.0) {
            return Err(Error::Config("certify: quad_n >= 2 and tol > 0 required".into()));
        }
        for cmp in &self.compare {
            match cmp {
                Comparison::Oracle => {
                    oracles::reference_for(&self.distribution, self.train.k, self.train.mode)
                        .map_err(|e| Error::Config(format!("compare: oracle requested but {e}")))?;
                }
                Comparison::Lp if self.valuation != ValuationKind::Additive => {
                    return Err(Error::Config("compare: the LP baseline needs additive valuations".into()));
                }
                Comparison::Duality if !matches!(self.distribution, DistributionSpec::UniformTriangle { .. }) => {
                    return Err(Error::Config("compare: duality certificates need a uniform triangle".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
name = "u01sq"
compare = ["oracle"]

[distribution]
kind = "uniform_rect"
c1 = 1.0
c2 = 1.0

[train]
k = 10
iterations = 100
"#;

    #[test]
    fn parses_toml_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.train.k, 10);
        assert_eq!(cfg.train.iterations, 100);
        assert_eq!(cfg.train.lambda_final, TrainConfig::default().lambda_final);
        assert_eq!(cfg.valuation, ValuationKind::Additive);
        assert_eq!(cfg.lp.n, 10);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn json_is_accepted() {
        let cfg = ExperimentConfig::from_json(r#"{"distribution": {"kind": "uniform_triangle", "c": 2.0}, "compare": ["duality"]}"#).unwrap();
        assert_eq!(cfg.distribution, DistributionSpec::uniform_triangle(2.0));
    }

    fn err(text: &str) -> String {
        ExperimentConfig::from_toml(text).unwrap_err().to_string()
    }

    #[test]
    fn errors_name_the_field() {
        assert!(err(&BASIC.replace("k = 10", "k = 1")).contains("train.k"));
        assert!(err(&BASIC.replace("iterations = 100", "iteratons = 100")).contains("iteratons"));
        assert!(err(&BASIC.replace("c2 = 1.0", "c2 = -1.0")).contains("distribution"));
        assert!(err(&format!("{BASIC}\n[lp]\nn = 41\n")).contains("lp.n"));
        assert!(err(&BASIC.replace("k = 10", "k = \"ten\"")).contains("k"));
    }

    #[test]
    fn comparisons_need_support() {
        let no_oracle = BASIC.replace("c2 = 1.0", "c2 = 1.7");
        assert!(err(&no_oracle).contains("compare"));
        let duality = BASIC.replace("[\"oracle\"]", "[\"duality\"]");
        assert!(err(&duality).contains("compare"));
    }

    #[test]
    fn mode_must_fit_valuation() {
        let text = BASIC.replace("compare = [\"oracle\"]", "valuation = \"unit_demand\"");
        assert!(err(&text).contains("train.mode"));
        let ok = text.replace("k = 10", "k = 10\nmode = \"unit_demand\"");
        ExperimentConfig::from_toml(&ok).unwrap();
    }
}
