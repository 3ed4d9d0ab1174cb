//! Synthetic registration scenes.
//!
//! A scene is one registration problem: a confidence-map stack rendered from
//! a known pose, the ROI it spans, and the ground truth needed for training
//! and evaluation. Visible fiducial points get sharp blobs at their projected
//! locations; occluded ones (inside an occluder rectangle, or facing away
//! from the camera) get the broad low-contrast response of an uncertain
//! detector.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{project, Model3D, PoseHypothesis, PoseJson, NUM_FP, NUM_NFP};

use super::{
    render_blob, render_occluded, ConfidenceMap, ConfidenceStack, Grid, RectPx, Roi, MAP_SIZE,
};

/// Occlusion levels the generator accepts (fractions of the ROI area).
pub const OCCLUSION_LEVELS: [f64; 6] = [0.0, 0.01, 0.04, 0.09, 0.16, 0.25];

const ROI_PAD: f64 = 1.3;
const SIGMA_BLOB_DEFAULT: f64 = 2.0;
/// NFP blob values lose this factor inside an occluder rectangle.
const NFP_OCCLUSION_ATTENUATION: f32 = 0.9;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("occlusion fraction {0} is not one of {OCCLUSION_LEVELS:?}")]
    InvalidOcclusionFraction(f64),
    #[error("scene bundle i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene bundle meta: {0}")]
    Meta(String),
}

/// One registration problem with ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub stack: ConfidenceStack,
    pub roi: Roi,
    pub gt_pose: PoseHypothesis,
    /// The 38 unique landmarks (FPs then non-shared NFPs) in image pixels.
    pub gt_landmarks2d: Vec<Point2<f64>>,
    pub gt_visibility: Vec<bool>,
    pub occlusion_patches: Vec<RectPx>,
    pub seed: u64,
}

impl Scene {
    /// Ground-truth FP locations in image pixels (first 19 eval landmarks).
    pub fn gt_fp2d(&self) -> &[Point2<f64>] {
        &self.gt_landmarks2d[..NUM_FP]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneMeta {
    roi: Roi,
    q: f64,
    pose: PoseJson,
    gt_landmarks2d: Vec<[f64; 2]>,
    gt_visibility: Vec<bool>,
    occlusion_patches: Vec<RectPx>,
    seed: u64,
}

/// Renders a scene for `model` under `pose` at the given occlusion level.
///
/// The ROI is the padded square bounding box of the projected landmarks. One
/// seeded square occluder of area `occlusion_fraction * roi_area` is dropped
/// inside the ROI; an FP is occluded if it falls inside the patch or if its
/// rotated surface normal points away from the camera.
pub fn synth_scene(
    model: &Model3D,
    pose: &PoseHypothesis,
    occlusion_fraction: f64,
    seed: u64,
) -> Result<Scene, SceneError> {
    synth_scene_with(model, pose, occlusion_fraction, seed, SIGMA_BLOB_DEFAULT)
}

/// [`synth_scene`] with an explicit blob width for the rendered responses.
pub fn synth_scene_with(
    model: &Model3D,
    pose: &PoseHypothesis,
    occlusion_fraction: f64,
    seed: u64,
    sigma_blob: f64,
) -> Result<Scene, SceneError> {
    if !OCCLUSION_LEVELS.iter().any(|&l| (l - occlusion_fraction).abs() < 1e-12) {
        return Err(SceneError::InvalidOcclusionFraction(occlusion_fraction));
    }
    assert!(sigma_blob > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let eval_indices = model.eval_landmark_indices();
    let eval_pts3d: Vec<_> = eval_indices.iter().map(|&i| model.points[i]).collect();
    let gt_landmarks2d = project(pose, &eval_pts3d);

    // Padded square around the projected landmarks.
    let (mut min_x, mut min_y, mut max_x, mut max_y) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &gt_landmarks2d {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let side = ROI_PAD * (max_x - min_x).max(max_y - min_y);
    let cx = 0.5 * (min_x + max_x);
    let cy = 0.5 * (min_y + max_y);
    let roi = Roi { origin: [cx - side / 2.0, cy - side / 2.0], side };

    // Seeded occluder patch, fully inside the ROI.
    let mut occlusion_patches = Vec::new();
    if occlusion_fraction > 0.0 {
        let patch_side = occlusion_fraction.sqrt() * side;
        let x = roi.origin[0] + rng.random_range(0.0..(side - patch_side));
        let y = roi.origin[1] + rng.random_range(0.0..(side - patch_side));
        occlusion_patches.push(RectPx { x, y, w: patch_side, h: patch_side });
    }

    // FP visibility: external patch or self-occlusion by the rotated normal.
    let fp2d = &gt_landmarks2d[..NUM_FP];
    let mut gt_visibility = Vec::with_capacity(NUM_FP);
    for (slot, p) in fp2d.iter().enumerate() {
        let externally = occlusion_patches.iter().any(|r| r.contains((p.x, p.y)));
        let normal = pose.rotation() * model.normals[model.fp_indices[slot]];
        gt_visibility.push(!externally && normal.z > 0.0);
    }

    // FP confidence maps.
    let mut maps_a = Vec::with_capacity(NUM_FP);
    for (slot, p) in fp2d.iter().enumerate() {
        let center = roi.to_map((p.x, p.y));
        if gt_visibility[slot] {
            let amplitude = rng.random_range(0.85..1.0);
            maps_a.push(render_blob(center, sigma_blob, amplitude));
        } else {
            // An unreliable detector: broad response drifted off the truth.
            let off = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let sub_seed = rng.random::<u64>();
            maps_a.push(render_occluded((center.0 + off.0, center.1 + off.1), sub_seed));
        }
    }

    // NFP maps: one blob per NFP at its projected location, attenuated where
    // the map pixel sits inside an occluder.
    let nfp_pts3d: Vec<_> = model.nfp_indices.iter().map(|&i| model.points[i]).collect();
    let nfp2d = project(pose, &nfp_pts3d);
    let mut maps_b = Vec::with_capacity(NUM_NFP);
    for p in &nfp2d {
        let center = roi.to_map((p.x, p.y));
        let amplitude = rng.random_range(0.85..1.0);
        let map = render_blob(center, sigma_blob, amplitude);
        let map = if occlusion_patches.is_empty() {
            map
        } else {
            let attenuated = Grid::from_fn(|x, y| {
                let img = roi.to_image((x as f64, y as f64));
                let v = map.value(x, y);
                if occlusion_patches.iter().any(|r| r.contains(img)) {
                    v * NFP_OCCLUSION_ATTENUATION
                } else {
                    v
                }
            });
            ConfidenceMap::from_grid_clamped(attenuated)
        };
        maps_b.push(map);
    }

    Ok(Scene {
        stack: ConfidenceStack::new(maps_a, maps_b),
        roi,
        gt_pose: pose.clone(),
        gt_landmarks2d,
        gt_visibility,
        occlusion_patches,
        seed,
    })
}

fn write_maps(path: &Path, maps: &[ConfidenceMap]) -> Result<(), SceneError> {
    let mut buf = Vec::with_capacity(maps.len() * MAP_SIZE * MAP_SIZE * 4);
    for m in maps {
        for v in m.grid().values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

fn read_maps(path: &Path, count: usize) -> Result<Vec<ConfidenceMap>, SceneError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let expect = count * MAP_SIZE * MAP_SIZE * 4;
    if buf.len() != expect {
        return Err(SceneError::Meta(format!(
            "{}: expected {expect} bytes, found {}",
            path.display(),
            buf.len()
        )));
    }
    let mut maps = Vec::with_capacity(count);
    let mut off = 0;
    for _ in 0..count {
        let mut grid = Grid::zeros();
        for y in 0..MAP_SIZE {
            for x in 0..MAP_SIZE {
                let v = f32::from_le_bytes(buf[off..off + 4].try_into().unwrap());
                grid.set(x, y, v);
                off += 4;
            }
        }
        maps.push(ConfidenceMap::from_grid_clamped(grid));
    }
    Ok(maps)
}

impl Scene {
    /// Writes the bundle directory: `meta.json`, `maps_a.bin`, `maps_b.bin`
    /// (little-endian f32, row-major, landmark-major). The NFP sum map is
    /// derived data and never stored.
    pub fn save_bundle(&self, dir: &Path) -> Result<(), SceneError> {
        fs::create_dir_all(dir)?;
        let meta = SceneMeta {
            roi: self.roi,
            q: self.roi.q(),
            pose: self.gt_pose.to_json(),
            gt_landmarks2d: self.gt_landmarks2d.iter().map(|p| [p.x, p.y]).collect(),
            gt_visibility: self.gt_visibility.clone(),
            occlusion_patches: self.occlusion_patches.clone(),
            seed: self.seed,
        };
        let text = serde_json::to_string_pretty(&meta)
            .map_err(|e| SceneError::Meta(e.to_string()))?;
        fs::write(dir.join("meta.json"), text)?;
        write_maps(&dir.join("maps_a.bin"), &self.stack.maps_a)?;
        write_maps(&dir.join("maps_b.bin"), &self.stack.maps_b)?;
        Ok(())
    }

    pub fn load_bundle(dir: &Path) -> Result<Scene, SceneError> {
        let text = fs::read_to_string(dir.join("meta.json"))?;
        let meta: SceneMeta =
            serde_json::from_str(&text).map_err(|e| SceneError::Meta(e.to_string()))?;
        let pose = PoseHypothesis::from_json(&meta.pose)
            .map_err(|e| SceneError::Meta(e.to_string()))?;
        let maps_a = read_maps(&dir.join("maps_a.bin"), NUM_FP)?;
        let maps_b = read_maps(&dir.join("maps_b.bin"), NUM_NFP)?;
        Ok(Scene {
            stack: ConfidenceStack::new(maps_a, maps_b),
            roi: meta.roi,
            gt_pose: pose,
            gt_landmarks2d: meta
                .gt_landmarks2d
                .iter()
                .map(|p| Point2::new(p[0], p[1]))
                .collect(),
            gt_visibility: meta.gt_visibility,
            occlusion_patches: meta.occlusion_patches,
            seed: meta.seed,
        })
    }
}
