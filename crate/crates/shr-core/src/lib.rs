//! Occlusion-robust registration of a dense 3D head model onto 2D landmark
//! confidence maps.
//!
//! The pipeline estimates a weak-perspective pose from the subset of fiducial
//! points (FPs) judged reliable, then repairs weakly-constrained solutions by
//! moving three synthetic 2D landmarks ("SensiblePoints") with small recurrent
//! policy networks. Every SensiblePoint move yields a new pose hypothesis; the
//! hypothesis whose projected landmarks and silhouette best agree with the
//! confidence maps wins.
//!
//! Crate layout:
//!
//! - [`geometry`] - head model, weak-perspective projection and pose solving,
//!   registration error metrics.
//! - [`confmap`] - 80x80 confidence-map grids, rendering, blurring, sampling,
//!   and the synthetic scene generator used for training and evaluation.
//! - [`visibility`] - per-landmark visible/occluded classification from
//!   confidence-map statistics.
//! - [`spinit`] - SensiblePoint initialization via context-feature shape
//!   retrieval with a frontal/profile branch.
//! - [`scoring`] - alignment score, rewards, and the binary state descriptor
//!   fed to the policies.
//! - [`policy`] - the recurrent policy network and its REINFORCE update.
//! - [`refine`] - hypothesis generation, the interleaved refinement loop, and
//!   baseline registration modes.

pub mod confmap;
pub mod geometry;
pub mod policy;
pub mod refine;
pub mod scoring;
pub mod seed;
pub mod spinit;
pub mod visibility;

pub use geometry::{Correspondences, Model3D, PoseHypothesis};
pub use refine::{run_inference, InferenceConfig, RefinePolicy};

