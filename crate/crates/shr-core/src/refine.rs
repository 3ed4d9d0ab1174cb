//! Hypothesis generation and the interleaved refinement loop.
//!
//! Each iteration rolls one episode per SensiblePoint from the best
//! configuration found so far; only the episode's own SP moves, every move
//! solves a fresh weak-perspective hypothesis, and the global best (which
//! always includes the initial hypothesis) seeds the next iteration. The
//! final pose is the highest-scoring hypothesis seen anywhere.

use nalgebra::Point2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confmap::{peak_location, Scene};
use crate::geometry::{
    estimate_weak_perspective, nrme, Correspondences, GeometryError, Model3D, PoseHypothesis, NUM_SP,
};
use crate::policy::{
    apply_action, forward, sample_action, Action, PolicyError, PolicyParams, RecurrentState,
    Trajectory, TrajectoryStep,
};
use crate::scoring::{build_state, reward, score_components, BlurredStack, ScoreBreakdown, ScoreWeights};
use crate::spinit::{init_sensiblepoints, ReferenceEntry, SpInitError};
use crate::visibility::{select_visible, VisibilityModel};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    SpInit(#[from] SpInitError),
    #[error("registration infeasible: {0}")]
    RegistrationInfeasible(String),
}

/// Inference hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct InferenceConfig {
    /// Moves per episode (T1).
    pub t1_steps: usize,
    /// Refinement iterations (T2).
    pub t2_iterations: usize,
    /// Step size as a fraction of the ROI side.
    pub eps2: f64,
    pub sigma_blur: f64,
    pub weights: ScoreWeights,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            t1_steps: 30,
            t2_iterations: 4,
            eps2: 0.01,
            sigma_blur: 1.5,
            weights: ScoreWeights::default(),
            seed: 0,
        }
    }
}

/// Where a hypothesis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Initial,
    Step { iteration: usize, sp: usize, step: usize },
}

/// One scored hypothesis.
#[derive(Debug, Clone)]
pub struct HypothesisRecord {
    pub sp_positions: [Point2<f64>; NUM_SP],
    pub pose: PoseHypothesis,
    pub score: ScoreBreakdown,
    pub provenance: Provenance,
}

/// One audit-log line; the harness writes these as JSON lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub iteration: usize,
    /// SP index; absent for the initial hypothesis.
    pub sp: Option<usize>,
    pub step: usize,
    pub action: Option<String>,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s: f64,
    /// 38-landmark error against ground truth, when the scene carries it.
    pub nrme: Option<f64>,
}

/// Scene state shared by every hypothesis: detections, visibility, blurred
/// maps, the SP starting locations, and the initial hypothesis.
pub struct PreparedScene<'a> {
    pub model: &'a Model3D,
    pub scene: &'a Scene,
    pub stack: BlurredStack,
    pub weights: ScoreWeights,
    pub eps2: f64,
    /// Per-map detected FP coordinates (image pixels).
    pub detections: Vec<Point2<f64>>,
    pub mask: Vec<bool>,
    /// Visible detections excluding SP slots; the solve correspondences.
    visible_non_sp: Vec<(usize, Point2<f64>)>,
    pub initial: HypothesisRecord,
}

/// Detected FP coordinates: per-map sub-pixel argmax mapped to image pixels.
pub fn detect_fp_coords(scene: &Scene) -> Vec<Point2<f64>> {
    scene
        .stack
        .maps_a
        .iter()
        .map(|m| {
            let p = scene.roi.to_image(peak_location(m));
            Point2::new(p.0, p.1)
        })
        .collect()
}

/// Solves a pose hypothesis from the SensiblePoints plus the visible non-SP
/// detections. SPs always participate, replacing their own FPs.
pub fn hypothesize(
    x_c: &[Point2<f64>; NUM_SP],
    visible_non_sp: &[(usize, Point2<f64>)],
    model: &Model3D,
) -> Result<PoseHypothesis, GeometryError> {
    let mut c = Correspondences::default();
    for (j, p) in x_c.iter().enumerate() {
        c.push(*p, model.sp_point(j));
    }
    for &(slot, p) in visible_non_sp {
        c.push(p, model.fp_point(slot));
    }
    estimate_weak_perspective(&c)
}

impl<'a> PreparedScene<'a> {
    /// Runs detection, visibility, SP initialization, and the initial solve.
    pub fn prepare(
        scene: &'a Scene,
        model: &'a Model3D,
        vis_model: &VisibilityModel,
        db: &[ReferenceEntry],
        config: &InferenceConfig,
    ) -> Result<Self, RefineError> {
        let detections = detect_fp_coords(scene);
        let (_, mask) = select_visible(vis_model, &scene.stack, &detections);

        let sp_slots: Vec<usize> = (0..NUM_SP).map(|j| model.sp_fp_slot(j)).collect();
        let visible_pairs: Vec<(usize, Point2<f64>)> = detections
            .iter()
            .enumerate()
            .filter(|(slot, _)| mask[*slot])
            .map(|(slot, p)| (slot, *p))
            .collect();
        let visible_non_sp: Vec<(usize, Point2<f64>)> = visible_pairs
            .iter()
            .copied()
            .filter(|(slot, _)| !sp_slots.contains(slot))
            .collect();

        let x_c0 = init_sensiblepoints(model, &visible_pairs, db, &scene.stack, &scene.roi)?;

        let stack = BlurredStack::new(scene, config.sigma_blur);
        let pose = hypothesize(&x_c0, &visible_non_sp, model).map_err(|e| {
            RefineError::RegistrationInfeasible(format!("initial hypothesis failed: {e}"))
        })?;
        let score = score_components(&pose, model, &stack, &mask, &config.weights);
        let initial = HypothesisRecord {
            sp_positions: x_c0,
            pose,
            score,
            provenance: Provenance::Initial,
        };

        Ok(PreparedScene {
            model,
            scene,
            stack,
            weights: config.weights,
            eps2: config.eps2,
            detections,
            mask,
            visible_non_sp,
            initial,
        })
    }

    pub fn initial_score(&self) -> ScoreBreakdown {
        self.initial.score
    }

    /// Pose hypothesis for an SP configuration against this scene's visible
    /// detections.
    pub fn hypothesize_at(
        &self,
        x_c: &[Point2<f64>; NUM_SP],
    ) -> Result<PoseHypothesis, GeometryError> {
        hypothesize(x_c, &self.visible_non_sp, self.model)
    }

    fn score_of(&self, pose: &PoseHypothesis) -> ScoreBreakdown {
        score_components(pose, self.model, &self.stack, &self.mask, &self.weights)
    }

    fn nrme_of(&self, pose: &PoseHypothesis) -> Option<f64> {
        let indices = self.model.eval_landmark_indices();
        let pts3d: Vec<_> = indices.iter().map(|&i| self.model.points[i]).collect();
        nrme(pose, &pts3d, &self.scene.gt_landmarks2d, self.scene.roi.omega()).ok()
    }
}

/// One refinement step: the record plus the action that produced it.
#[derive(Debug, Clone)]
pub struct EpisodeStep {
    pub action: Action,
    pub record: HypothesisRecord,
}

/// One policy episode: `t1` sampled moves of SP `sp_index` from `start`.
///
/// Returns the trajectory (rewards relative to `s0`) and the per-step
/// records. The recurrent state starts from zero.
pub fn refine_episode(
    prepared: &PreparedScene<'_>,
    sp_index: usize,
    params: &PolicyParams,
    start: &[Point2<f64>; NUM_SP],
    s0: f64,
    t1: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Trajectory, Vec<EpisodeStep>), RefineError> {
    assert!(t1 >= 1);
    let mut x_c = *start;
    let mut rs = RecurrentState::zeros();
    let mut pose = hypothesize(&x_c, &prepared.visible_non_sp, prepared.model)?;
    let mut traj = Trajectory::default();
    let mut steps = Vec::with_capacity(t1);
    let omega = prepared.scene.roi.omega();

    for step in 1..=t1 {
        let state = build_state(&pose, prepared.model, &prepared.stack, &prepared.mask);
        let (probs, next_rs) = forward(params, &state, &rs)?;
        let action = sample_action(&probs, rng);
        rs = next_rs;

        let moved = apply_action(
            (x_c[sp_index].x, x_c[sp_index].y),
            Action::from_index(action),
            prepared.eps2,
            omega,
            &prepared.scene.roi,
        );
        x_c[sp_index] = Point2::new(moved.0, moved.1);

        pose = hypothesize(&x_c, &prepared.visible_non_sp, prepared.model)?;
        let score = prepared.score_of(&pose);
        traj.steps.push(TrajectoryStep {
            state,
            action,
            log_prob: probs[action].ln(),
            reward: reward(score.s, s0),
        });
        steps.push(EpisodeStep {
            action: Action::from_index(action),
            record: HypothesisRecord {
                sp_positions: x_c,
                pose: pose.clone(),
                score,
                provenance: Provenance::Step { iteration: 0, sp: sp_index, step },
            },
        });
    }
    Ok((traj, steps))
}

/// One greedy episode: each step evaluates all four moves and takes the
/// highest-scoring one (ties in action order: up, down, left, right).
pub fn greedy_episode(
    prepared: &PreparedScene<'_>,
    sp_index: usize,
    start: &[Point2<f64>; NUM_SP],
    t1: usize,
) -> Result<Vec<EpisodeStep>, RefineError> {
    assert!(t1 >= 1);
    let mut x_c = *start;
    let mut steps = Vec::with_capacity(t1);
    let omega = prepared.scene.roi.omega();

    for step in 1..=t1 {
        let mut best: Option<(Action, Point2<f64>, PoseHypothesis, ScoreBreakdown)> = None;
        for action in Action::ALL {
            let moved = apply_action(
                (x_c[sp_index].x, x_c[sp_index].y),
                action,
                prepared.eps2,
                omega,
                &prepared.scene.roi,
            );
            let mut candidate = x_c;
            candidate[sp_index] = Point2::new(moved.0, moved.1);
            let pose = hypothesize(&candidate, &prepared.visible_non_sp, prepared.model)?;
            let score = prepared.score_of(&pose);
            let is_better = best.as_ref().is_none_or(|(_, _, _, s)| score.s > s.s);
            if is_better {
                best = Some((action, candidate[sp_index], pose, score));
            }
        }
        let (action, new_sp, pose, score) = best.expect("four candidates evaluated");
        x_c[sp_index] = new_sp;
        steps.push(EpisodeStep {
            action,
            record: HypothesisRecord {
                sp_positions: x_c,
                pose,
                score,
                provenance: Provenance::Step { iteration: 0, sp: sp_index, step },
            },
        });
    }
    Ok(steps)
}

/// Which move generator drives the refinement.
pub enum RefinePolicy<'a> {
    Learned(&'a [PolicyParams; NUM_SP]),
    Greedy,
}

/// Inference result: the winning hypothesis plus everything the harness logs.
pub struct InferenceOutcome {
    pub pose: PoseHypothesis,
    pub best: HypothesisRecord,
    pub initial: HypothesisRecord,
    pub audit: Vec<AuditEntry>,
    pub mask: Vec<bool>,
    pub detections: Vec<Point2<f64>>,
}

/// Full interleaved inference.
///
/// Detect, classify visibility, initialize SensiblePoints, then `t2`
/// iterations of one episode per SP from the best configuration so far. The
/// returned pose is the argmax-score hypothesis over the initial solve and
/// all `t2 * 3 * t1` refined ones; ties keep the earliest.
pub fn run_inference(
    scene: &Scene,
    model: &Model3D,
    policy: &RefinePolicy<'_>,
    vis_model: &VisibilityModel,
    db: &[ReferenceEntry],
    config: &InferenceConfig,
) -> Result<InferenceOutcome, RefineError> {
    let prepared = PreparedScene::prepare(scene, model, vis_model, db, config)?;
    let initial = prepared.initial.clone();
    let s0 = initial.score.s;

    let mut audit = Vec::with_capacity(1 + config.t2_iterations * NUM_SP * config.t1_steps);
    audit.push(AuditEntry {
        iteration: 0,
        sp: None,
        step: 0,
        action: None,
        s1: initial.score.s1,
        s2: initial.score.s2,
        s3: initial.score.s3,
        s: initial.score.s,
        nrme: prepared.nrme_of(&initial.pose),
    });

    let mut best = initial.clone();
    for iteration in 1..=config.t2_iterations {
        let start = best.sp_positions;
        for sp in 0..NUM_SP {
            let steps = match policy {
                RefinePolicy::Learned(all_params) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(
                        config.seed,
                        &[0x5250, iteration as u64, sp as u64],
                    ));
                    let (_, steps) = refine_episode(
                        &prepared,
                        sp,
                        &all_params[sp],
                        &start,
                        s0,
                        config.t1_steps,
                        &mut rng,
                    )?;
                    steps
                }
                RefinePolicy::Greedy => greedy_episode(&prepared, sp, &start, config.t1_steps)?,
            };
            for episode_step in steps {
                let mut record = episode_step.record;
                let step = match &mut record.provenance {
                    Provenance::Step { iteration: it, step, .. } => {
                        *it = iteration;
                        *step
                    }
                    Provenance::Initial => 0,
                };
                audit.push(AuditEntry {
                    iteration,
                    sp: Some(sp),
                    step,
                    action: Some(episode_step.action.name().to_string()),
                    s1: record.score.s1,
                    s2: record.score.s2,
                    s3: record.score.s3,
                    s: record.score.s,
                    nrme: prepared.nrme_of(&record.pose),
                });
                if record.score.s > best.score.s {
                    best = record;
                }
            }
        }
    }

    Ok(InferenceOutcome {
        pose: best.pose.clone(),
        best,
        initial,
        audit,
        mask: prepared.mask,
        detections: prepared.detections,
    })
}

/// Baseline registration modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    AllFps,
    VisibleFps,
}

/// Registers directly from detected FPs, using either all of them or only
/// those the mask marks visible.
pub fn register_baseline(
    scene: &Scene,
    model: &Model3D,
    mask: &[bool],
    mode: BaselineMode,
) -> Result<PoseHypothesis, GeometryError> {
    let detections = detect_fp_coords(scene);
    let mut c = Correspondences::default();
    for (slot, p) in detections.iter().enumerate() {
        let usable = match mode {
            BaselineMode::AllFps => true,
            BaselineMode::VisibleFps => mask[slot],
        };
        if usable {
            c.push(*p, model.fp_point(slot));
        }
    }
    estimate_weak_perspective(&c)
}
