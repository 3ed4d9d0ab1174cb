//! Run configuration shared by every subcommand.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shr_core::confmap::OCCLUSION_LEVELS;
use shr_core::policy::CreditMode;
use shr_core::refine::InferenceConfig;
use shr_core::scoring::ScoreWeights;

use crate::HarnessError;

/// All tunables of the pipeline with the published defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Relative threshold for the first visibility feature.
    pub eps1: f64,
    /// SensiblePoint step size as a fraction of the ROI side.
    pub eps2: f64,
    /// Blob width of rendered confidence responses (map pixels).
    pub sigma_blob: f64,
    /// Blur applied to maps before scoring (map pixels).
    pub sigma_blur: f64,
    /// Moves per episode (T1).
    pub t1_steps: usize,
    /// Refinement iterations (T2).
    pub t2_iterations: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub learning_rate: f64,
    pub clip_norm: f64,
    /// Credit assignment for policy updates.
    pub credit: CreditConfig,
    /// Interleaved refinement iterations rolled out per training scene.
    pub train_iterations: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub root_seed: u64,
    pub occlusion_levels: Vec<f64>,
    pub train_per_level: usize,
    pub val_per_level: usize,
    pub test_per_level: usize,
    /// Dense point count of the synthetic head.
    pub model_points: usize,
    pub model_seed: u64,
    /// Cap on confidence maps used to fit the visibility model.
    pub visibility_fit_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps1: 0.1,
            eps2: 0.01,
            sigma_blob: 2.0,
            sigma_blur: 1.5,
            t1_steps: 30,
            t2_iterations: 4,
            lambda1: 0.21,
            lambda2: 0.60,
            lambda3: 0.19,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            credit: CreditConfig::PerStep,
            train_iterations: 2,
            epochs: 3,
            batch_size: 8,
            root_seed: 42,
            occlusion_levels: OCCLUSION_LEVELS.to_vec(),
            train_per_level: 1000,
            val_per_level: 200,
            test_per_level: 200,
            model_points: 2000,
            model_seed: 42,
            visibility_fit_cap: 6000,
        }
    }
}

/// Serializable face of [`CreditMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditConfig {
    PerStep,
    RewardsToGo,
}

impl CreditConfig {
    pub fn mode(self) -> CreditMode {
        match self {
            CreditConfig::PerStep => CreditMode::PerStepReward,
            CreditConfig::RewardsToGo => CreditMode::RewardsToGo,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !self.weights().is_valid() {
            return Err(HarnessError::Config(format!(
                "lambdas ({}, {}, {}) must be non-negative and sum to 1",
                self.lambda1, self.lambda2, self.lambda3
            )));
        }
        let in_unit = self.eps1.is_finite() && self.eps1 > 0.0 && self.eps1 < 1.0;
        if !in_unit {
            return Err(HarnessError::Config(format!("eps1 {} out of (0,1)", self.eps1)));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.eps2) || !positive(self.sigma_blob) || !positive(self.sigma_blur) {
            return Err(HarnessError::Config("eps2 and sigmas must be positive".into()));
        }
        if self.t1_steps == 0 || self.t2_iterations == 0 || self.batch_size == 0 {
            return Err(HarnessError::Config("t1, t2, and batch_size must be >= 1".into()));
        }
        for &level in &self.occlusion_levels {
            if !OCCLUSION_LEVELS.iter().any(|&l| (l - level).abs() < 1e-12) {
                return Err(HarnessError::Config(format!(
                    "occlusion level {level} is not one of {OCCLUSION_LEVELS:?}"
                )));
            }
        }
        if self.model_points < 500 {
            return Err(HarnessError::Config("model_points must be >= 500".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> ScoreWeights {
        ScoreWeights { lambda1: self.lambda1, lambda2: self.lambda2, lambda3: self.lambda3 }
    }

    pub fn inference(&self, seed: u64) -> InferenceConfig {
        InferenceConfig {
            t1_steps: self.t1_steps,
            t2_iterations: self.t2_iterations,
            eps2: self.eps2,
            sigma_blur: self.sigma_blur,
            weights: self.weights(),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_constants() {
        let c = RunConfig::default();
        assert_eq!(c.eps1, 0.1);
        assert_eq!(c.eps2, 0.01);
        assert_eq!(c.t1_steps, 30);
        assert_eq!(c.t2_iterations, 4);
        assert_eq!((c.lambda1, c.lambda2, c.lambda3), (0.21, 0.60, 0.19));
        assert_eq!(c.epochs, 3);
        c.validate().unwrap();
    }

    #[test]
    fn bad_lambdas_rejected() {
        let c = RunConfig { lambda1: 0.5, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn bad_level_rejected() {
        let c = RunConfig { occlusion_levels: vec![0.33], ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"epochs": 1}"#).unwrap();
        assert_eq!(c.epochs, 1);
        assert_eq!(c.t1_steps, 30);
    }
}
