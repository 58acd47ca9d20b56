//! Experiment configuration files (TOML) and the schema version stamped on
//! every JSON report.
//!
//! ```toml
//! n_runs = 3
//! out_dir = "out"
//!
//! [target]
//! preset = "t2d"          # or inline: d, c0, [[target.terms]] omega/re/im
//!
//! [data]
//! points_per_dim = 30
//!
//! [model]
//! architecture = "parallel"
//! n_features = 2
//! prefactors = [[10.0, 20.0], [10.0, 20.0]]
//! groups = [[1, 2]]       # one-based feature indices
//! blocks_per_layer = 10
//!
//! [train]
//! iterations = 3000
//! seed = 42
//!
//! [noise]                 # optional; used by noisy evaluation
//! shots = 4096
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, ModelConfig, ParamCircuit};
use crate::dataset::{generate, Dataset, TargetSpec, Term, DEFAULT_ROW_CAP};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::training::TrainConfig;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetPreset {
    T2d,
    T4d,
}

impl TargetPreset {
    pub fn spec(self) -> TargetSpec {
        match self {
            TargetPreset::T2d => TargetSpec::t2d(),
            TargetPreset::T4d => TargetSpec::t4d(),
        }
    }
}

/// Either a named preset or an inline series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<TargetPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
}

impl TargetConfig {
    pub fn preset(preset: TargetPreset) -> Self {
        TargetConfig { preset: Some(preset), d: None, c0: None, terms: Vec::new() }
    }

    pub fn inline(spec: TargetSpec) -> Self {
        TargetConfig { preset: None, d: Some(spec.d), c0: Some(spec.c0), terms: spec.terms }
    }

    pub fn resolve(&self) -> Result<TargetSpec> {
        let inline = self.d.is_some() || self.c0.is_some() || !self.terms.is_empty();
        let spec = match (self.preset, inline) {
            (Some(_), true) => return Err(Error::config("target gives both a preset and inline fields")),
            (Some(p), false) => p.spec(),
            (None, _) => {
                let d = self.d.ok_or_else(|| Error::config("inline target needs `d`"))?;
                TargetSpec { d, c0: self.c0.unwrap_or(0.0), terms: self.terms.clone() }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn default_points() -> usize {
    30
}
fn default_row_cap() -> usize {
    DEFAULT_ROW_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_points")]
    pub points_per_dim: usize,
    #[serde(default = "default_row_cap")]
    pub row_cap: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { points_per_dim: default_points(), row_cap: default_row_cap() }
    }
}

fn default_runs() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    #[serde(default)]
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks every cross-module precondition without running anything heavy.
    pub fn validate(&self) -> Result<()> {
        let target = self.target.resolve()?;
        self.model.validate()?;
        self.train.validate()?;
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if self.n_runs == 0 {
            return Err(Error::config("n_runs must be at least 1"));
        }
        if self.model.n_features != target.d {
            return Err(Error::config(format!(
                "model has {} features but the target has {} dimensions",
                self.model.n_features, target.d
            )));
        }
        if self.data.points_per_dim < 2 {
            return Err(Error::config("points_per_dim must be at least 2"));
        }
        let rows = (self.data.points_per_dim as u128).checked_pow(target.d as u32).unwrap_or(u128::MAX);
        if rows > self.data.row_cap as u128 {
            return Err(Error::Resource(format!(
                "{}^{} = {rows} grid rows exceed the cap of {}; lower points_per_dim",
                self.data.points_per_dim, target.d, self.data.row_cap
            )));
        }
        Ok(())
    }

    pub fn target_spec(&self) -> Result<TargetSpec> {
        self.target.resolve()
    }

    pub fn dataset(&self) -> Result<Dataset> {
        generate(&self.target_spec()?, self.data.points_per_dim, self.data.row_cap)
    }

    pub fn circuit(&self) -> Result<ParamCircuit> {
        build_circuit(&self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
n_runs = 2

[target]
preset = "t2d"

[data]
points_per_dim = 12

[model]
architecture = "parallel"
n_features = 2
prefactors = [[10.0, 20.0], [10.0, 20.0]]
groups = [[1, 2]]
blocks_per_layer = 2

[train]
iterations = 10
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.model.groups, vec![vec![0, 1]]);
        assert_eq!(cfg.train.learning_rate, 0.001);
        assert_eq!(cfg.n_runs, 2);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("iterations = 10", "iterations = 10\nlearning_rat = 0.1");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn cross_checks() {
        let bad = SAMPLE.replace("preset = \"t2d\"", "preset = \"t4d\"");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
        let both = SAMPLE.replace("preset = \"t2d\"", "preset = \"t2d\"\nd = 2");
        assert!(matches!(ExperimentConfig::from_toml(&both), Err(Error::Config(_))));
        let big = SAMPLE.replace("points_per_dim = 12", "points_per_dim = 2000");
        assert!(matches!(ExperimentConfig::from_toml(&big), Err(Error::Resource(_))));
        let inline = SAMPLE.replace(
            "preset = \"t2d\"",
            "d = 2\nc0 = 0.1\nterms = [{ omega = [1.0, 0.0], re = 0.5 }]",
        );
        let cfg = ExperimentConfig::from_toml(&inline).unwrap();
        assert_eq!(cfg.target_spec().unwrap().terms.len(), 1);
        assert!(matches!(ExperimentConfig::load(Path::new("/nonexistent.toml")), Err(Error::Config(_))));
    }
}
