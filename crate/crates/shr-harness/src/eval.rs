//! Evaluation: four registration methods per scene per occlusion level, a
//! 38-landmark error report (JSON + CSV), and per-scene audit logs.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shr_core::confmap::Scene;
use shr_core::geometry::{nrme, Model3D, PoseHypothesis};
use shr_core::policy::PolicyParams;
use shr_core::refine::{
    detect_fp_coords, register_baseline, run_inference, AuditEntry, BaselineMode, RefinePolicy,
};
use shr_core::seed::derive;
use shr_core::spinit::ReferenceEntry;
use shr_core::visibility::{select_visible, VisibilityModel};

use crate::config::RunConfig;
use crate::refdb::load_refdb;
use crate::synth::{level_dir_name, list_scene_dirs, Split};
use crate::train::load_models;
use crate::HarnessError;

/// Method names, report order.
pub const METHODS: [&str; 4] = ["FP(All)", "FP(Vis)", "FP(Vis)+SHR", "FP(Vis)+Greedy"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub occlusion: f64,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
    pub failures: usize,
    /// Mean alignment score of the initial hypothesis (refinement methods).
    pub mean_initial_score: Option<f64>,
    /// Mean alignment score of the selected hypothesis.
    pub mean_final_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, method: &str, occlusion: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && (r.occlusion - occlusion).abs() < 1e-12)
    }
}

/// Per-scene outcome of one method.
#[derive(Debug, Clone, Copy)]
struct MethodResult {
    nrme: Option<f64>,
    initial_score: Option<f64>,
    final_score: Option<f64>,
}

struct SceneEval {
    results: [MethodResult; 4],
    shr_audit: Vec<AuditEntry>,
    greedy_audit: Vec<AuditEntry>,
}

fn eval_nrme(model: &Model3D, scene: &Scene, pose: &PoseHypothesis) -> Option<f64> {
    let indices = model.eval_landmark_indices();
    let pts3d: Vec<_> = indices.iter().map(|&i| model.points[i]).collect();
    nrme(pose, &pts3d, &scene.gt_landmarks2d, scene.roi.omega()).ok()
}

fn eval_scene(
    config: &RunConfig,
    model: &Model3D,
    visibility: &VisibilityModel,
    policies: &[PolicyParams; 3],
    db: &[ReferenceEntry],
    scene: &Scene,
    seed: u64,
) -> SceneEval {
    let detections = detect_fp_coords(scene);
    let (_, mask) = select_visible(visibility, &scene.stack, &detections);

    let baseline = |mode: BaselineMode| -> MethodResult {
        match register_baseline(scene, model, &mask, mode) {
            Ok(pose) => MethodResult {
                nrme: eval_nrme(model, scene, &pose),
                initial_score: None,
                final_score: None,
            },
            Err(_) => MethodResult { nrme: None, initial_score: None, final_score: None },
        }
    };
    let fp_all = baseline(BaselineMode::AllFps);
    let fp_vis = baseline(BaselineMode::VisibleFps);

    let refine = |policy: &RefinePolicy<'_>| -> (MethodResult, Vec<AuditEntry>) {
        let inference = config.inference(seed);
        match run_inference(scene, model, policy, visibility, db, &inference) {
            Ok(out) => (
                MethodResult {
                    nrme: eval_nrme(model, scene, &out.pose),
                    initial_score: Some(out.initial.score.s),
                    final_score: Some(out.best.score.s),
                },
                out.audit,
            ),
            Err(_) => {
                (MethodResult { nrme: None, initial_score: None, final_score: None }, Vec::new())
            }
        }
    };
    let (shr, shr_audit) = refine(&RefinePolicy::Learned(policies));
    let (greedy, greedy_audit) = refine(&RefinePolicy::Greedy);

    SceneEval { results: [fp_all, fp_vis, shr, greedy], shr_audit, greedy_audit }
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn aggregate(
    method: &str,
    occlusion: f64,
    results: &[MethodResult],
) -> ReportRow {
    let mut errors: Vec<f64> = results.iter().filter_map(|r| r.nrme).collect();
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let failures = results.len() - errors.len();
    let mean = if errors.is_empty() {
        f64::NAN
    } else {
        errors.iter().sum::<f64>() / errors.len() as f64
    };
    let mean_of = |f: fn(&MethodResult) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = results.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    ReportRow {
        method: method.to_string(),
        occlusion,
        n: results.len(),
        q1: quantile(&errors, 0.25),
        median: quantile(&errors, 0.5),
        q3: quantile(&errors, 0.75),
        mean,
        failures,
        mean_initial_score: mean_of(|r| r.initial_score),
        mean_final_score: mean_of(|r| r.final_score),
    }
}

fn write_audit(path: &Path, audit: &[AuditEntry]) -> Result<(), HarnessError> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    for entry in audit {
        writeln!(w, "{}", serde_json::to_string(entry)?)?;
    }
    Ok(())
}

/// Evaluates every test scene with all four methods and writes `report.json`,
/// `report.csv`, and per-scene audit logs under `out`.
pub fn cmd_eval(
    config: &RunConfig,
    model: &Model3D,
    data_dir: &Path,
    models_dir: &Path,
    out: &Path,
) -> Result<EvalReport, HarnessError> {
    config.validate()?;
    let (visibility, policies) = load_models(models_dir)?;
    let db = load_refdb(&data_dir.join("refdb"))?;
    let scenes_root = data_dir.join("scenes");
    fs::create_dir_all(out)?;

    let mut per_level: Vec<(f64, Vec<SceneEval>)> = Vec::new();
    for (level_idx, &level) in config.occlusion_levels.iter().enumerate() {
        let paths = list_scene_dirs(&scenes_root, Split::Test, level)?;
        let audit_dir = out.join("audit").join(level_dir_name(level));
        fs::create_dir_all(&audit_dir)?;
        let evals: Vec<SceneEval> = paths
            .par_iter()
            .enumerate()
            .map(|(idx, path)| -> Result<SceneEval, HarnessError> {
                let scene = Scene::load_bundle(path)?;
                let seed = derive(config.root_seed, &[0x6576_616C, level_idx as u64, idx as u64]);
                let ev = eval_scene(config, model, &visibility, &policies, &db, &scene, seed);
                write_audit(&audit_dir.join(format!("scene_{idx:05}_shr.jsonl")), &ev.shr_audit)?;
                write_audit(
                    &audit_dir.join(format!("scene_{idx:05}_greedy.jsonl")),
                    &ev.greedy_audit,
                )?;
                Ok(ev)
            })
            .collect::<Result<_, _>>()?;
        per_level.push((level, evals));
    }

    let mut rows = Vec::new();
    for (mi, method) in METHODS.iter().enumerate() {
        for (level, evals) in &per_level {
            let results: Vec<MethodResult> = evals.iter().map(|e| e.results[mi]).collect();
            rows.push(aggregate(method, *level, &results));
        }
    }
    let report = EvalReport { rows };

    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    let mut csv = String::from("method,occlusion,n,q1,median,q3,mean,failures\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method, r.occlusion, r.n, r.q1, r.median, r.q3, r.mean, r.failures
        ));
    }
    fs::write(out.join("report.csv"), csv)?;
    Ok(report)
}
