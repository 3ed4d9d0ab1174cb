//! Pipeline driver: dataset synthesis, model training, weight tuning,
//! evaluation, and single-scene registration, all deterministic from one
//! root seed.

pub mod config;
pub mod eval;
pub mod refdb;
pub mod register;
pub mod synth;
pub mod train;
pub mod tune;

use std::path::Path;

use shr_core::geometry::{make_synthetic_head, Model3D};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("file format: {0}")]
    Format(String),
    #[error("training: {0}")]
    Train(String),
    #[error("registration: {0}")]
    Register(String),
    #[error("no recorded trajectories to tune on")]
    NoTrajectories,
    #[error(transparent)]
    Scene(#[from] shr_core::confmap::SceneError),
}

/// Loads a head model from a JSON file, or synthesizes the configured one.
pub fn load_or_make_model(
    config: &config::RunConfig,
    path: Option<&Path>,
) -> Result<Model3D, HarnessError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Model3D::from_json(&text).map_err(|e| HarnessError::Format(e.to_string()))
        }
        None => Ok(make_synthetic_head(config.model_points, config.model_seed)),
    }
}
