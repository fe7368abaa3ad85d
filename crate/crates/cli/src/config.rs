//! Experiment configuration files (TOML).
//!
//! ```toml
//! N = 2000
//! M = 5
//! W = 5
//! rate = 0.5
//! alpha = [0.0, 0.2]
//! sigma = [1.0]
//! trials = 500
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use jointbp_core::channel::Boundary;
use jointbp_core::harness::ExperimentConfig;
use jointbp_core::modulation::Scheme;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_degree() -> usize {
    3
}
fn default_boundary() -> String {
    "cyclic".into()
}
fn default_modulation() -> String {
    "balanced".into()
}
fn default_max_iters() -> usize {
    50
}
fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: u8,
    #[serde(rename = "W")]
    pub w: u8,
    pub rate: f64,
    pub alpha: Vec<f64>,
    #[serde(default = "default_degree")]
    pub local_vn_degree: usize,
    #[serde(default)]
    pub code_seed: u64,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_boundary")]
    pub boundary: String,
    #[serde(default = "default_modulation")]
    pub modulation: String,
    pub trials: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation_export: Option<PathBuf>,
    /// Write measured wall time to the CSV (makes it run-dependent).
    #[serde(default)]
    pub timing: bool,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Relative paths in the file are taken relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        if let Some(p) = self.code_cache_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.modulation_export.as_mut() {
            fix(p);
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let boundary: Boundary = self
            .boundary
            .parse()
            .map_err(|e| CliError::Usage(format!("config key `boundary`: {e}")))?;
        let modulation: Scheme = self
            .modulation
            .parse()
            .map_err(|e| CliError::Usage(format!("config key `modulation`: {e}")))?;
        let cfg = ExperimentConfig {
            n: self.n,
            m: self.m,
            w: self.w,
            rate: self.rate,
            alphas: self.alpha.clone(),
            local_vn_degree: self.local_vn_degree,
            code_seed: self.code_seed,
            sigmas: self.sigma.clone(),
            beta: self.beta,
            boundary,
            modulation,
            trials: self.trials,
            max_iters: self.max_iters,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| CliError::Usage(format!("config: {e}")))?;
        Ok(cfg)
    }
}
