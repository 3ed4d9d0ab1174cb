//! Model fitting: the visibility classifier (t2 line search, Gaussian fit,
//! per-landmark zeta search) and REINFORCE training of the three per-SP
//! policies over episode rollouts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use shr_core::confmap::Scene;
use shr_core::geometry::{Model3D, NUM_FP, NUM_SP};
use shr_core::policy::{
    reinforce_update, save_policy, AdamState, PolicyParams, Trajectory, UpdateConfig,
};
use shr_core::refine::{refine_episode, PreparedScene};
use shr_core::seed::derive;
use shr_core::spinit::ReferenceEntry;
use shr_core::visibility::{
    classify, default_t2_grid, default_zeta_grid, extract_features, fit_classifier, learn_t2,
    learn_zeta, select_visible, VisibilityError, VisibilityModel, ZetaSample,
};

use crate::config::RunConfig;
use crate::refdb::load_refdb;
use crate::synth::{list_scene_dirs, Split};
use crate::HarnessError;

/// Fits the visibility model on labeled training scenes: line-search t2,
/// refit the classifier, then line-search each landmark's zeta against the
/// detector's localization error.
pub fn fit_visibility(config: &RunConfig, scenes: &[Scene]) -> Result<VisibilityModel, HarnessError> {
    if scenes.is_empty() {
        return Err(HarnessError::Train("no scenes for visibility fitting".into()));
    }
    let cap_scenes = (config.visibility_fit_cap / NUM_FP).max(1);
    let used: Vec<&Scene> = scenes.iter().take(cap_scenes).collect();

    let labeled: Vec<(&shr_core::confmap::ConfidenceMap, bool)> = used
        .iter()
        .flat_map(|s| {
            s.stack
                .maps_a
                .iter()
                .zip(&s.gt_visibility)
                .map(|(m, &v)| (m, v))
        })
        .collect();
    let t2 = learn_t2(&labeled, config.eps1, &default_t2_grid());

    let samples: Vec<_> = labeled
        .iter()
        .filter_map(|(m, v)| extract_features(m, config.eps1, t2).ok().map(|f| (f, *v)))
        .collect();
    let classifier = fit_classifier(&samples).map_err(|e| HarnessError::Train(e.to_string()))?;

    // Zeta search: weighted densities plus the detection error per landmark.
    let mut per_landmark: Vec<Vec<ZetaSample>> = vec![Vec::new(); NUM_FP];
    for scene in &used {
        let detections = shr_core::refine::detect_fp_coords(scene);
        let omega = scene.roi.omega();
        for slot in 0..NUM_FP {
            let features = match extract_features(&scene.stack.maps_a[slot], config.eps1, t2) {
                Ok(f) => f,
                Err(VisibilityError::AllZeroMap) => continue,
                Err(e) => return Err(HarnessError::Train(e.to_string())),
            };
            per_landmark[slot].push(ZetaSample {
                density_visible: classifier.visible.weighted_density(&features),
                density_occluded: classifier.occluded.weighted_density(&features),
                nme: (detections[slot] - scene.gt_fp2d()[slot]).norm() / omega,
            });
        }
    }
    let zeta = learn_zeta(&per_landmark, &default_zeta_grid());

    let model = VisibilityModel { classifier, eps1: config.eps1, t2, zeta };
    debug_assert!(model.validate());
    Ok(model)
}

/// One line of the training log.
#[derive(Debug, Serialize)]
struct TrainLogLine {
    epoch: usize,
    batch: usize,
    sp: usize,
    episodes: usize,
    loss: f64,
    grad_norm: f64,
    clipped: bool,
    baseline: f64,
}

/// Everything `cmd_train` produces.
pub struct TrainOutcome {
    pub visibility: VisibilityModel,
    pub policies: [PolicyParams; NUM_SP],
    pub scenes_used: usize,
    pub scenes_skipped: usize,
}

fn train_scene_paths(config: &RunConfig, scenes_root: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut paths = Vec::new();
    for &level in &config.occlusion_levels {
        paths.extend(list_scene_dirs(scenes_root, Split::Train, level)?);
    }
    Ok(paths)
}

/// Rolls `iterations` interleaved episodes per SP on a prepared scene and
/// returns the trajectories.
fn rollout(
    prepared: &PreparedScene<'_>,
    policies: &[PolicyParams; NUM_SP],
    t1: usize,
    iterations: usize,
    episode_seed: u64,
) -> Result<[Vec<Trajectory>; NUM_SP], HarnessError> {
    let s0 = prepared.initial.score.s;
    let mut out: [Vec<Trajectory>; NUM_SP] = Default::default();
    // Interleaved rollouts, mirroring inference: each iteration starts every
    // SP episode from the best configuration found so far, so later episodes
    // train the policies on near-converged states too.
    let mut best = prepared.initial.clone();
    for iteration in 0..iterations.max(1) {
        let start = best.sp_positions;
        for sp in 0..NUM_SP {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(
                episode_seed,
                &[iteration as u64, sp as u64],
            ));
            let (traj, steps) =
                refine_episode(prepared, sp, &policies[sp], &start, s0, t1, &mut rng)
                    .map_err(|e| HarnessError::Train(e.to_string()))?;
            out[sp].push(traj);
            for step in steps {
                if step.record.score.s > best.score.s {
                    best = step.record;
                }
            }
        }
    }
    Ok(out)
}

/// Trains the three policies for `config.epochs` epochs over the training
/// scenes and writes a JSON-lines log to `log_path` (one line per batch per
/// SP).
#[allow(clippy::too_many_arguments)]
pub fn train_policies(
    config: &RunConfig,
    model: &Model3D,
    visibility: &VisibilityModel,
    db: &[ReferenceEntry],
    scene_paths: &[PathBuf],
    log_path: Option<&Path>,
) -> Result<(Vec<PolicyParams>, usize, usize), HarnessError> {
    let mut policies: [PolicyParams; NUM_SP] = [
        PolicyParams::init(derive(config.root_seed, &[0x706F_6C00, 0])),
        PolicyParams::init(derive(config.root_seed, &[0x706F_6C00, 1])),
        PolicyParams::init(derive(config.root_seed, &[0x706F_6C00, 2])),
    ];
    // One fully independent network per SensiblePoint.
    assert!(policies[0] != policies[1] && policies[1] != policies[2]);
    let mut optimizers: Vec<AdamState> = (0..NUM_SP).map(|_| AdamState::new()).collect();
    let update_cfg = UpdateConfig {
        learning_rate: config.learning_rate,
        clip_norm: config.clip_norm,
        credit: config.credit.mode(),
        ..Default::default()
    };

    let mut log = match log_path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent)?;
            }
            Some(std::io::BufWriter::new(fs::File::create(p)?))
        }
        None => None,
    };

    let mut used = 0usize;
    let mut skipped = 0usize;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..scene_paths.len()).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(derive(config.root_seed, &[0x7368_7566, epoch as u64]));
        order.shuffle(&mut shuffle_rng);

        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            // Roll out the whole batch against an immutable parameter
            // snapshot; updates apply after the batch.
            let rollouts: Vec<Option<[Vec<Trajectory>; NUM_SP]>> = chunk
                .par_iter()
                .map(|&scene_idx| {
                    let scene = Scene::load_bundle(&scene_paths[scene_idx]).ok()?;
                    let inference = config.inference(derive(
                        config.root_seed,
                        &[0x7472_6169, epoch as u64, scene_idx as u64],
                    ));
                    let prepared =
                        PreparedScene::prepare(&scene, model, visibility, db, &inference).ok()?;
                    rollout(
                        &prepared,
                        &policies,
                        config.t1_steps,
                        config.train_iterations,
                        derive(config.root_seed, &[0x6570_6973, epoch as u64, scene_idx as u64]),
                    )
                    .ok()
                })
                .collect();

            let mut per_sp: [Vec<Trajectory>; NUM_SP] = Default::default();
            for r in rollouts {
                match r {
                    Some(trajs) => {
                        used += 1;
                        for (sp, list) in trajs.into_iter().enumerate() {
                            per_sp[sp].extend(list);
                        }
                    }
                    None => skipped += 1,
                }
            }

            for (sp, batch) in per_sp.iter().enumerate() {
                if batch.is_empty() {
                    continue;
                }
                let stats =
                    reinforce_update(&mut policies[sp], batch, &mut optimizers[sp], &update_cfg)
                        .map_err(|e| {
                            HarnessError::Train(format!(
                                "epoch {epoch} batch {batch_idx} sp {sp}: {e}"
                            ))
                        })?;
                if let Some(w) = log.as_mut() {
                    let line = TrainLogLine {
                        epoch,
                        batch: batch_idx,
                        sp,
                        episodes: batch.len(),
                        loss: stats.loss,
                        grad_norm: stats.grad_norm,
                        clipped: stats.clipped,
                        baseline: stats.baseline,
                    };
                    writeln!(w, "{}", serde_json::to_string(&line)?)?;
                }
            }
        }
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    Ok((policies.to_vec(), used, skipped))
}

/// Full training command: fit visibility on the training scenes, train the
/// three policies, and write `visibility.json`, `policy_{0,1,2}.bin`, and
/// `train_log.jsonl` under `out`.
pub fn cmd_train(
    config: &RunConfig,
    model: &Model3D,
    data_dir: &Path,
    out: &Path,
) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    let scenes_root = data_dir.join("scenes");
    let db = load_refdb(&data_dir.join("refdb"))?;
    let paths = train_scene_paths(config, &scenes_root)?;
    if paths.is_empty() {
        return Err(HarnessError::Train("no training scenes found".into()));
    }

    // Visibility fitting reads a capped sample of scenes, spread across
    // levels by the interleaved path order.
    let interleaved: Vec<&PathBuf> = {
        let per_level: Vec<Vec<&PathBuf>> = config
            .occlusion_levels
            .iter()
            .enumerate()
            .map(|(li, _)| {
                paths
                    .iter()
                    .filter(move |p| {
                        p.parent()
                            .and_then(|d| d.file_name())
                            .map(|n| n == crate::synth::level_dir_name(config.occlusion_levels[li]).as_str())
                            .unwrap_or(false)
                    })
                    .collect()
            })
            .collect();
        let max_len = per_level.iter().map(|v| v.len()).max().unwrap_or(0);
        (0..max_len)
            .flat_map(|i| per_level.iter().filter_map(move |v| v.get(i).copied()))
            .collect()
    };
    let cap_scenes = (config.visibility_fit_cap / NUM_FP).max(1);
    let vis_scenes: Vec<Scene> = interleaved
        .iter()
        .take(cap_scenes)
        .map(|p| Scene::load_bundle(p).map_err(HarnessError::from))
        .collect::<Result<_, _>>()?;
    let visibility = fit_visibility(config, &vis_scenes)?;

    fs::create_dir_all(out)?;
    fs::write(out.join("visibility.json"), serde_json::to_string_pretty(&visibility)?)?;

    let (policies, used, skipped) = train_policies(
        config,
        model,
        &visibility,
        &db,
        &paths,
        Some(&out.join("train_log.jsonl")),
    )?;
    for (sp, params) in policies.iter().enumerate() {
        save_policy(params, &out.join(format!("policy_{sp}.bin")))
            .map_err(|e| HarnessError::Train(e.to_string()))?;
    }

    Ok(TrainOutcome {
        visibility,
        policies: policies.try_into().map_err(|_| HarnessError::Train("policy count".into()))?,
        scenes_used: used,
        scenes_skipped: skipped,
    })
}

/// Loads the three policy files and the visibility model from a models dir.
pub fn load_models(dir: &Path) -> Result<(VisibilityModel, [PolicyParams; NUM_SP]), HarnessError> {
    let text = fs::read_to_string(dir.join("visibility.json"))?;
    let visibility: VisibilityModel = serde_json::from_str(&text)?;
    if !visibility.validate() {
        return Err(HarnessError::Format("invalid visibility model".into()));
    }
    let mut policies = Vec::with_capacity(NUM_SP);
    for sp in 0..NUM_SP {
        policies.push(
            shr_core::policy::load_policy(&dir.join(format!("policy_{sp}.bin")))
                .map_err(|e| HarnessError::Format(e.to_string()))?,
        );
    }
    Ok((
        visibility,
        policies.try_into().map_err(|_| HarnessError::Format("policy count".into()))?,
    ))
}

/// Mask accuracy of a fitted model against scene ground truth; a convenience
/// for validation checks.
pub fn visibility_accuracy(model: &VisibilityModel, scenes: &[Scene]) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for scene in scenes {
        let detections = shr_core::refine::detect_fp_coords(scene);
        let (_, mask) = select_visible(model, &scene.stack, &detections);
        for (got, want) in mask.iter().zip(&scene.gt_visibility) {
            correct += (got == want) as usize;
            total += 1;
        }
    }
    correct as f64 / total.max(1) as f64
}

/// Per-sample classification with explicit features; used by tests that
/// bypass scenes.
pub fn classify_map(
    model: &VisibilityModel,
    map: &shr_core::confmap::ConfidenceMap,
    landmark: usize,
) -> bool {
    match extract_features(map, model.eps1, model.t2) {
        Ok(f) => classify(model, &f, landmark),
        Err(_) => false,
    }
}
