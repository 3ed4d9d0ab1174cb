//! Single-scene registration: run inference on one bundle and write the pose,
//! an overlay description (projected FPs, silhouette polylines, SP locations,
//! score breakdown), and the audit log.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shr_core::confmap::Scene;
use shr_core::geometry::{project_point, Model3D, PoseJson, NUM_FP};
use shr_core::refine::{run_inference, RefinePolicy};
use shr_core::scoring::{silhouette_polylines, ScoreBreakdown};
use shr_core::seed::derive;

use crate::config::RunConfig;
use crate::refdb::load_refdb;
use crate::train::load_models;
use crate::HarnessError;

/// Plot-ready registration overlay in image pixels.
#[derive(Debug, Serialize, Deserialize)]
pub struct Overlay {
    pub fp_points: Vec<[f64; 2]>,
    pub contour: Vec<[f64; 2]>,
    pub nose: Vec<[f64; 2]>,
    pub sp_positions: Vec<[f64; 2]>,
    pub visibility: Vec<bool>,
    pub score: ScoreBreakdown,
}

/// Registers one scene bundle and writes `pose.json`, `overlay.json`, and
/// `audit.jsonl` under `out`.
pub fn cmd_register(
    config: &RunConfig,
    model: &Model3D,
    scene_dir: &Path,
    models_dir: &Path,
    refdb_dir: &Path,
    out: &Path,
) -> Result<PoseJson, HarnessError> {
    config.validate()?;
    let scene = Scene::load_bundle(scene_dir)?;
    let (visibility, policies) = load_models(models_dir)?;
    let db = load_refdb(refdb_dir)?;

    let inference = config.inference(derive(config.root_seed, &[0x7265_6769]));
    let outcome = run_inference(
        &scene,
        model,
        &RefinePolicy::Learned(&policies),
        &visibility,
        &db,
        &inference,
    )
    .map_err(|e| HarnessError::Register(e.to_string()))?;

    fs::create_dir_all(out)?;
    let pose_json = outcome.pose.to_json();
    fs::write(out.join("pose.json"), serde_json::to_string_pretty(&pose_json)?)?;

    let fp_points: Vec<[f64; 2]> = (0..NUM_FP)
        .map(|slot| {
            let p = project_point(&outcome.pose, model.fp_point(slot));
            [p.x, p.y]
        })
        .collect();
    let (contour, nose) = silhouette_polylines(&outcome.pose, model);
    let overlay = Overlay {
        fp_points,
        contour: contour.iter().map(|p| [p.x, p.y]).collect(),
        nose: nose.iter().map(|p| [p.x, p.y]).collect(),
        sp_positions: outcome.best.sp_positions.iter().map(|p| [p.x, p.y]).collect(),
        visibility: outcome.mask.clone(),
        score: outcome.best.score,
    };
    fs::write(out.join("overlay.json"), serde_json::to_string_pretty(&overlay)?)?;

    let mut w = std::io::BufWriter::new(fs::File::create(out.join("audit.jsonl"))?);
    for entry in &outcome.audit {
        writeln!(w, "{}", serde_json::to_string(entry)?)?;
    }
    Ok(pose_json)
}
