//! Experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::LowerPercentile;
use crate::benchfns::BaseFunction;
use crate::error::{Error, Result};
use crate::models::ModelSettings;
use crate::tss::{TssMethod, TssSpec};

pub const DEFAULT_BUDGET_PER_DIM: usize = 250;
pub const DEFAULT_TARGET: f64 = 1e-8;
pub const DEFAULT_RESAMPLES: usize = 100;
pub const DEFAULT_GENERATIONS: usize = 100;
pub const DEFAULT_NANOUT_THRESHOLD: f64 = 0.25;
pub const DEFAULT_ROBUSTNESS_THRESHOLD: f64 = 0.9;
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.9;
pub const DEFAULT_ALPHA: f64 = 0.05;

fn budget_per_dim() -> usize {
    DEFAULT_BUDGET_PER_DIM
}
fn target() -> f64 {
    DEFAULT_TARGET
}
fn resamples() -> usize {
    DEFAULT_RESAMPLES
}
fn generations() -> usize {
    DEFAULT_GENERATIONS
}
fn nanout_threshold() -> f64 {
    DEFAULT_NANOUT_THRESHOLD
}
fn robustness_threshold() -> f64 {
    DEFAULT_ROBUSTNESS_THRESHOLD
}
fn robustness_delta() -> f64 {
    crate::analysis::robustness::ROBUSTNESS_DELTA
}
fn cluster_threshold() -> f64 {
    DEFAULT_CLUSTER_THRESHOLD
}
fn alpha() -> f64 {
    DEFAULT_ALPHA
}
fn medoid_restarts() -> usize {
    5
}
fn validation_levels() -> usize {
    1
}
fn default_tss() -> Vec<TssSpec> {
    [TssMethod::Full, TssMethod::Nearest, TssMethod::Knn]
        .map(TssSpec::method)
        .to_vec()
}

/// Categorical column of the error table used to split it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitAxis {
    Dim,
    Function,
    Instance,
    Seed,
    Model,
}

/// Within each stratum of the remaining run coordinates, `validation_levels`
/// levels of `axis` go to validation and the rest to test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub axis: SplitAxis,
    #[serde(default = "validation_levels")]
    pub validation_levels: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            axis: SplitAxis::Model,
            validation_levels: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub functions: Vec<BaseFunction>,
    pub instances: Vec<u64>,
    pub seeds: Vec<u64>,
    #[serde(default = "budget_per_dim")]
    pub budget_per_dim: usize,
    #[serde(default = "target")]
    pub target: f64,
    /// IPOP restarts after the first run.
    #[serde(default)]
    pub max_restarts: usize,
    #[serde(default = "default_tss")]
    pub tss: Vec<TssSpec>,
    #[serde(default)]
    pub models: Vec<ModelSettings>,
    /// Smoothed resamples per sampled generation.
    #[serde(default = "resamples")]
    pub resamples: usize,
    /// Generations sampled per run.
    #[serde(default = "generations")]
    pub generations: usize,
    /// Root of every derived random stream.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "nanout_threshold")]
    pub nanout_threshold: f64,
    #[serde(default = "robustness_threshold")]
    pub robustness_threshold: f64,
    #[serde(default = "robustness_delta")]
    pub robustness_delta: f64,
    #[serde(default)]
    pub lower_percentile: LowerPercentile,
    #[serde(default = "cluster_threshold")]
    pub cluster_threshold: f64,
    #[serde(default = "medoid_restarts")]
    pub medoid_restarts: usize,
    #[serde(default = "alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub split: SplitSpec,
}

impl ExperimentConfig {
    /// Minimal configuration with every optional field at its default.
    pub fn new(dims: Vec<usize>, functions: Vec<BaseFunction>, instances: Vec<u64>, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            dims,
            functions,
            instances,
            seeds,
            budget_per_dim: budget_per_dim(),
            target: target(),
            max_restarts: 0,
            tss: default_tss(),
            models: Vec::new(),
            resamples: resamples(),
            generations: generations(),
            seed: 0,
            nanout_threshold: nanout_threshold(),
            robustness_threshold: robustness_threshold(),
            robustness_delta: robustness_delta(),
            lower_percentile: LowerPercentile::default(),
            cluster_threshold: cluster_threshold(),
            medoid_restarts: medoid_restarts(),
            alpha: alpha(),
            split: SplitSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn budget(&self, d: usize) -> usize {
        self.budget_per_dim * d
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dims.is_empty() || self.functions.is_empty() || self.instances.is_empty() || self.seeds.is_empty() {
            return bad("dims, functions, instances and seeds must be nonempty");
        }
        if self.dims.contains(&0) {
            return bad("dimensions must be positive");
        }
        if self.tss.is_empty() {
            return bad("at least one TSS method is required");
        }
        if self.budget_per_dim == 0 || !(self.target >= 0.0) {
            return bad("budget must be positive and target nonnegative");
        }
        if !(0.0..=1.0).contains(&self.nanout_threshold) || !(0.0..=1.0).contains(&self.robustness_threshold) {
            return bad("thresholds must lie in [0, 1]");
        }
        if self.split.validation_levels == 0 {
            return bad("split needs at least one validation level");
        }
        let mut tl: Vec<String> = self.tss.iter().map(TssSpec::label).collect();
        tl.sort();
        tl.dedup();
        if tl.len() != self.tss.len() {
            return bad("TSS specs must have distinct labels");
        }
        for t in &self.tss {
            t.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for m in &self.models {
            m.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let mut labels: Vec<String> = self.models.iter().map(ModelSettings::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.models.len() {
            return bad("model settings must have distinct labels");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c =
            ExperimentConfig::from_json(r#"{"dims":[2],"functions":["sphere"],"instances":[1],"seeds":[1]}"#).unwrap();
        assert_eq!(
            c,
            ExperimentConfig::new(vec![2], vec![BaseFunction::Sphere], vec![1], vec![1])
        );
        assert_eq!(c.budget(3), 750);
        assert!(
            ExperimentConfig::from_json(r#"{"dims":[],"functions":["sphere"],"instances":[1],"seeds":[1]}"#).is_err()
        );
        assert!(
            ExperimentConfig::from_json(r#"{"dims":[2],"functions":["nope"],"instances":[1],"seeds":[1]}"#).is_err()
        );
    }
}
