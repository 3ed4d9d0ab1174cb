//! Score-weight tuning: a two-phase grid search that picks the weights whose
//! induced score ranking best matches the inverse error ranking of the
//! recorded refinement stages, measured by normalized discounted cumulative
//! gain.

use std::path::Path;

use rayon::prelude::*;
use shr_core::confmap::Scene;
use shr_core::geometry::Model3D;
use shr_core::refine::{run_inference, RefinePolicy};
use shr_core::scoring::ScoreWeights;
use shr_core::seed::derive;

use crate::config::RunConfig;
use crate::refdb::load_refdb;
use crate::synth::{list_scene_dirs, Split};
use crate::train::load_models;
use crate::HarnessError;

/// One recorded refinement stage.
#[derive(Debug, Clone, Copy)]
pub struct Stage {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub nrme: f64,
}

/// Discounted cumulative gain of gains listed in rank order.
fn dcg(gains_in_rank_order: &[f64]) -> f64 {
    gains_in_rank_order
        .iter()
        .enumerate()
        .map(|(i, &g)| g / (i as f64 + 2.0).log2())
        .sum()
}

/// NDCG of ranking stages by `score` against relevance derived from inverse
/// error: relevance is the min-max normalized negated error, so the
/// lowest-error stage has relevance 1. Returns 1 for degenerate inputs
/// (every ranking of identical relevances is ideal).
pub fn ndcg_of_ranking(scores: &[f64], nrmes: &[f64]) -> f64 {
    debug_assert_eq!(scores.len(), nrmes.len());
    let n = scores.len();
    if n == 0 {
        return 1.0;
    }
    let (min_e, max_e) = nrmes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if !(max_e - min_e).is_finite() || max_e - min_e < 1e-15 {
        return 1.0;
    }
    let relevance: Vec<f64> = nrmes.iter().map(|&e| (max_e - e) / (max_e - min_e)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    // Ranking by score, descending; stable on ties.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    let ranked: Vec<f64> = order.iter().map(|&i| relevance[i]).collect();

    let mut ideal = relevance.clone();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));

    let idcg = dcg(&ideal);
    if idcg <= 0.0 {
        return 1.0;
    }
    dcg(&ranked) / idcg
}

/// Grid 0.00, 0.01, ..., 1.00.
fn percent_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Best grid value by NDCG for a per-stage score function; ties keep the
/// smallest candidate.
fn argmax_over_grid(stages: &[Stage], score_at: impl Fn(&Stage, f64) -> f64) -> f64 {
    let nrmes: Vec<f64> = stages.iter().map(|st| st.nrme).collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for candidate in percent_grid() {
        let scores: Vec<f64> = stages.iter().map(|st| score_at(st, candidate)).collect();
        let objective = ndcg_of_ranking(&scores, &nrmes);
        if objective > best.0 + 1e-15 {
            best = (objective, candidate);
        }
    }
    best.1
}

/// Two-phase weight search over per-scene stage recordings.
///
/// Phase 1 ranks with `lambda1*s1 + (1-lambda1)*s3` (no occluded term) and
/// averages the per-scene argmax. Phase 2 fixes that ratio and searches the
/// share handed to s2 the same way. The result is normalized to sum to 1.
pub fn tune_weights(per_scene: &[Vec<Stage>]) -> Result<ScoreWeights, HarnessError> {
    let usable: Vec<&Vec<Stage>> = per_scene.iter().filter(|s| s.len() >= 2).collect();
    if usable.is_empty() {
        return Err(HarnessError::NoTrajectories);
    }

    let lambda1_star: f64 = usable
        .iter()
        .map(|stages| argmax_over_grid(stages, |st, l1| l1 * st.s1 + (1.0 - l1) * st.s3))
        .sum::<f64>()
        / usable.len() as f64;

    let mu_star: f64 = usable
        .iter()
        .map(|stages| {
            argmax_over_grid(stages, |st, mu| {
                (1.0 - mu) * lambda1_star * st.s1
                    + mu * st.s2
                    + (1.0 - mu) * (1.0 - lambda1_star) * st.s3
            })
        })
        .sum::<f64>()
        / usable.len() as f64;

    let raw = [
        (1.0 - mu_star) * lambda1_star,
        mu_star,
        (1.0 - mu_star) * (1.0 - lambda1_star),
    ];
    let total: f64 = raw.iter().sum();
    Ok(ScoreWeights {
        lambda1: raw[0] / total,
        lambda2: raw[1] / total,
        lambda3: raw[2] / total,
    })
}

/// Runs inference on every validation scene, records the per-stage
/// (s1, s2, s3, NRME) values, and returns the tuned weights.
pub fn cmd_tune_lambdas(
    config: &RunConfig,
    model: &Model3D,
    data_dir: &Path,
    models_dir: &Path,
) -> Result<ScoreWeights, HarnessError> {
    config.validate()?;
    let (visibility, policies) = load_models(models_dir)?;
    let db = load_refdb(&data_dir.join("refdb"))?;
    let scenes_root = data_dir.join("scenes");

    let mut paths = Vec::new();
    for &level in &config.occlusion_levels {
        paths.extend(list_scene_dirs(&scenes_root, Split::Val, level)?);
    }
    if paths.is_empty() {
        return Err(HarnessError::NoTrajectories);
    }

    let per_scene: Vec<Vec<Stage>> = paths
        .par_iter()
        .enumerate()
        .map(|(idx, path)| {
            let Ok(scene) = Scene::load_bundle(path) else {
                return Vec::new();
            };
            let inference = config.inference(derive(config.root_seed, &[0x7475_6E65, idx as u64]));
            match run_inference(
                &scene,
                model,
                &RefinePolicy::Learned(&policies),
                &visibility,
                &db,
                &inference,
            ) {
                Ok(out) => out
                    .audit
                    .iter()
                    .filter(|e| e.iteration > 0)
                    .filter_map(|e| {
                        e.nrme.map(|nrme| Stage { s1: e.s1, s2: e.s2, s3: e.s3, nrme })
                    })
                    .collect(),
                Err(_) => Vec::new(),
            }
        })
        .collect();

    tune_weights(&per_scene)
}
