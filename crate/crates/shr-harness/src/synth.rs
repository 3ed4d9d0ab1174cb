//! Dataset synthesis: seeded scene bundles per split and occlusion level,
//! plus the reference database for SensiblePoint initialization.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use shr_core::confmap::{synth_scene_with, Scene};
use shr_core::geometry::{Model3D, PoseHypothesis};
use shr_core::seed::derive;
use shr_core::spinit::{build_context_feature, context_anchors, ReferenceEntry};

use crate::config::RunConfig;
use crate::refdb::save_refdb;
use crate::HarnessError;

/// Dataset splits with disjoint seed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Val => 2,
            Split::Test => 3,
        }
    }

    fn count(&self, config: &RunConfig) -> usize {
        match self {
            Split::Train => config.train_per_level,
            Split::Val => config.val_per_level,
            Split::Test => config.test_per_level,
        }
    }
}

pub fn level_dir_name(level: f64) -> String {
    format!("occ{:02}", (level * 100.0).round() as u32)
}

pub fn scene_dir(scenes_root: &Path, split: Split, level: f64, index: usize) -> PathBuf {
    scenes_root
        .join(split.name())
        .join(level_dir_name(level))
        .join(format!("scene_{index:05}"))
}

/// Samples a head pose: yaw in +/-45 degrees (a third of scenes land in the
/// retrieval branch), small pitch and roll, moderate scale.
pub fn sample_pose(rng: &mut ChaCha8Rng) -> PoseHypothesis {
    let yaw = rng.random_range(-45.0f64..45.0).to_radians();
    let pitch = rng.random_range(-10.0f64..10.0).to_radians();
    let roll = rng.random_range(-10.0f64..10.0).to_radians();
    let scale = rng.random_range(0.7..1.1);
    let tx = rng.random_range(100.0..140.0);
    let ty = rng.random_range(100.0..140.0);

    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let r_yaw = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let r_pitch = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    let r_roll = Matrix3::new(cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0);
    let rotation = r_roll * r_pitch * r_yaw;
    PoseHypothesis::new(scale, rotation, Vector2::new(tx, ty))
        .expect("composed rotations are orthonormal")
}

/// Generates one scene deterministically from the root seed and its indices.
pub fn make_scene(
    model: &Model3D,
    config: &RunConfig,
    split: Split,
    level_idx: usize,
    index: usize,
) -> Result<Scene, HarnessError> {
    let level = config.occlusion_levels[level_idx];
    let scene_seed = derive(
        config.root_seed,
        &[split.tag(), level_idx as u64, index as u64],
    );
    let mut pose_rng = ChaCha8Rng::seed_from_u64(derive(scene_seed, &[0x506F_5345]));
    let pose = sample_pose(&mut pose_rng);
    Ok(synth_scene_with(model, &pose, level, scene_seed, config.sigma_blob)?)
}

/// Builds the reference entry of an unoccluded scene: context feature at the
/// detected anchor peaks plus the ground-truth FP shape in map coordinates.
pub fn reference_entry(scene: &Scene) -> ReferenceEntry {
    let feature = build_context_feature(&scene.stack, &context_anchors(&scene.stack));
    let shape = scene
        .gt_fp2d()
        .iter()
        .map(|p| {
            let m = scene.roi.to_map((p.x, p.y));
            nalgebra::Point2::new(m.0, m.1)
        })
        .collect();
    ReferenceEntry { feature, shape }
}

/// Writes all scene bundles and the reference database under `out`.
pub fn cmd_synth(config: &RunConfig, model: &Model3D, out: &Path) -> Result<(), HarnessError> {
    config.validate()?;
    let scenes_root = out.join("scenes");
    for split in [Split::Train, Split::Val, Split::Test] {
        let count = split.count(config);
        for (level_idx, &level) in config.occlusion_levels.iter().enumerate() {
            let jobs: Vec<usize> = (0..count).collect();
            let results: Vec<Result<(), HarnessError>> = jobs
                .par_iter()
                .map(|&index| {
                    let scene = make_scene(model, config, split, level_idx, index)?;
                    let dir = scene_dir(&scenes_root, split, level, index);
                    scene.save_bundle(&dir)?;
                    Ok(())
                })
                .collect();
            for r in results {
                r?;
            }
        }
    }

    // Reference database from the unoccluded training scenes.
    let zero_idx = config
        .occlusion_levels
        .iter()
        .position(|&l| l == 0.0)
        .ok_or_else(|| HarnessError::Config("occlusion levels must include 0".into()))?;
    let entries: Vec<ReferenceEntry> = (0..config.train_per_level)
        .into_par_iter()
        .map(|index| {
            let scene = make_scene(model, config, Split::Train, zero_idx, index)?;
            Ok(reference_entry(&scene))
        })
        .collect::<Result<_, HarnessError>>()?;
    save_refdb(&out.join("refdb"), &entries)?;
    Ok(())
}

/// Lists the bundle directories of one split level, index order.
pub fn list_scene_dirs(
    scenes_root: &Path,
    split: Split,
    level: f64,
) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = scenes_root.join(split.name()).join(level_dir_name(level));
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use shr_core::geometry::make_synthetic_head;

    fn small_config() -> RunConfig {
        RunConfig {
            train_per_level: 3,
            val_per_level: 2,
            test_per_level: 2,
            occlusion_levels: vec![0.0, 0.25],
            ..Default::default()
        }
    }

    #[test]
    fn synth_is_deterministic_and_splits_disjoint() {
        let config = small_config();
        let model = make_synthetic_head(600, config.model_seed);
        let a = make_scene(&model, &config, Split::Train, 0, 1).unwrap();
        let b = make_scene(&model, &config, Split::Train, 0, 1).unwrap();
        assert_eq!(a.stack.maps_a, b.stack.maps_a);
        assert_eq!(a.gt_landmarks2d, b.gt_landmarks2d);
        let t = make_scene(&model, &config, Split::Test, 0, 1).unwrap();
        assert_ne!(a.seed, t.seed);
        assert_ne!(a.gt_landmarks2d, t.gt_landmarks2d);
    }

    #[test]
    fn bundles_round_trip_through_disk() {
        let config = small_config();
        let model = make_synthetic_head(600, config.model_seed);
        let out = std::env::temp_dir().join(format!("shr-synth-{}", std::process::id()));
        cmd_synth(&config, &model, &out).unwrap();

        let dirs = list_scene_dirs(&out.join("scenes"), Split::Train, 0.25).unwrap();
        assert_eq!(dirs.len(), 3);
        let loaded = Scene::load_bundle(&dirs[0]).unwrap();
        let direct = make_scene(&model, &config, Split::Train, 1, 0).unwrap();
        assert_eq!(loaded.stack.maps_a, direct.stack.maps_a);
        assert_eq!(loaded.occlusion_patches, direct.occlusion_patches);

        let db = crate::refdb::load_refdb(&out.join("refdb")).unwrap();
        assert_eq!(db.len(), 3);
        std::fs::remove_dir_all(&out).ok();
    }
}
