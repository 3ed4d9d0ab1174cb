//! Recurrent policy network moving one SensiblePoint.
//!
//! Architecture: three fully connected layers (Leaky-ReLU), an LSTM cell, and
//! a 4-way softmax over the move directions; every layer is 64 units wide.
//! Training uses the score-function gradient estimator over episode rollouts
//! with a running-mean baseline, global gradient-norm clipping, and
//! adaptive-moment updates, implemented here so the gradients can be
//! checked against finite differences.
//!
//! Parameters are kept at f32 precision (the on-disk format) while all math
//! runs in f64; updates re-quantize, making save/load lossless at any point.

mod io;
mod train;

pub use io::{load_policy, save_policy};
pub use train::{
    episode_grads, episode_loss, reinforce_update, relu_kink_between, AdamState, CreditMode,
    Gradients, UpdateConfig, UpdateStats,
};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::confmap::Roi;
use crate::scoring::{StateVector, STATE_LEN};

/// Hidden width of every layer, including the LSTM cell.
pub const HIDDEN: usize = 64;
/// Number of move actions.
pub const NUM_ACTIONS: usize = 4;
/// Leaky-ReLU negative slope.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("non-finite activation; the network diverged")]
    NonFiniteActivation,
    #[error("non-finite gradient; the update diverged")]
    NonFiniteGradient,
    #[error("policy file is corrupt: {0}")]
    CorruptFile(String),
    #[error("policy file shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("policy file i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Tensor slots, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Slot {
    Fc1W,
    Fc1B,
    Fc2W,
    Fc2B,
    Fc3W,
    Fc3B,
    WInput,
    UInput,
    BInput,
    WForget,
    UForget,
    BForget,
    WCell,
    UCell,
    BCell,
    WOutputGate,
    UOutputGate,
    BOutputGate,
    OutW,
    OutB,
}

pub const NUM_SLOTS: usize = 20;

/// (rows, cols) of every tensor; biases are column vectors.
pub const SLOT_SHAPES: [(usize, usize); NUM_SLOTS] = [
    (HIDDEN, STATE_LEN),
    (HIDDEN, 1),
    (HIDDEN, HIDDEN),
    (HIDDEN, 1),
    (HIDDEN, HIDDEN),
    (HIDDEN, 1),
    (HIDDEN, HIDDEN),
    (HIDDEN, HIDDEN),
    (HIDDEN, 1),
    (HIDDEN, HIDDEN),
    (HIDDEN, HIDDEN),
    (HIDDEN, 1),
    (HIDDEN, HIDDEN),
    (HIDDEN, HIDDEN),
    (HIDDEN, 1),
    (HIDDEN, HIDDEN),
    (HIDDEN, HIDDEN),
    (HIDDEN, 1),
    (NUM_ACTIONS, HIDDEN),
    (NUM_ACTIONS, 1),
];

/// Network parameters. Values are always exactly representable as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    tensors: Vec<DMatrix<f64>>,
    pub init_seed: u64,
}

impl PolicyParams {
    /// Seeded init: uniform in +/- 1/sqrt(fan_in) per weight matrix, zero
    /// biases except the forget-gate bias at +1.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = SLOT_SHAPES
            .iter()
            .enumerate()
            .map(|(i, &(rows, cols))| {
                if cols == 1 {
                    let fill = if i == Slot::BForget as usize { 1.0 } else { 0.0 };
                    DMatrix::from_element(rows, cols, fill)
                } else {
                    let bound = 1.0 / (cols as f64).sqrt();
                    DMatrix::from_fn(rows, cols, |_, _| {
                        let v: f64 = rng.random_range(-bound..bound);
                        v as f32 as f64
                    })
                }
            })
            .collect();
        PolicyParams { tensors, init_seed: seed }
    }

    pub fn get(&self, slot: Slot) -> &DMatrix<f64> {
        &self.tensors[slot as usize]
    }

    /// Raw tensor access in slot order; mainly for inspection and the
    /// finite-difference checks. Values written here bypass the f32
    /// quantization contract until the next update.
    pub fn tensors(&self) -> &[DMatrix<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.tensors
    }

    pub(crate) fn from_tensors(tensors: Vec<DMatrix<f64>>, init_seed: u64) -> Self {
        debug_assert_eq!(tensors.len(), NUM_SLOTS);
        PolicyParams { tensors, init_seed }
    }

    /// Rounds every value to f32 precision (the storage contract).
    pub(crate) fn quantize(&mut self) {
        for t in &mut self.tensors {
            for v in t.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }
}

/// LSTM carry between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub hidden: DVector<f64>,
    pub cell: DVector<f64>,
}

impl RecurrentState {
    pub fn zeros() -> Self {
        RecurrentState { hidden: DVector::zeros(HIDDEN), cell: DVector::zeros(HIDDEN) }
    }
}

/// Move directions; `Up` is -y (image coordinates grow downward).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        }
    }
}

/// One recorded policy step.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub state: StateVector,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
}

/// A full episode.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub(crate) fn leaky_relu(v: f64) -> f64 {
    if v > 0.0 { v } else { LEAKY_SLOPE * v }
}

pub(crate) fn leaky_relu_grad(v: f64) -> f64 {
    if v > 0.0 { 1.0 } else { LEAKY_SLOPE }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// All intermediate activations of one step, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: DVector<f64>,
    pub z1: DVector<f64>,
    pub a1: DVector<f64>,
    pub z2: DVector<f64>,
    pub a2: DVector<f64>,
    pub z3: DVector<f64>,
    pub a3: DVector<f64>,
    pub h_prev: DVector<f64>,
    pub c_prev: DVector<f64>,
    pub gate_i: DVector<f64>,
    pub gate_f: DVector<f64>,
    pub gate_g: DVector<f64>,
    pub gate_o: DVector<f64>,
    pub c: DVector<f64>,
    pub tanh_c: DVector<f64>,
    pub h: DVector<f64>,
    pub probs: [f64; NUM_ACTIONS],
}

pub(crate) fn forward_cached(
    params: &PolicyParams,
    state: &StateVector,
    rs: &RecurrentState,
) -> StepCache {
    debug_assert_eq!(state.len(), STATE_LEN);
    let x = DVector::from_column_slice(state.values());
    let bias = |slot: Slot| params.get(slot).column(0).into_owned();

    let z1 = params.get(Slot::Fc1W) * &x + bias(Slot::Fc1B);
    let a1 = z1.map(leaky_relu);
    let z2 = params.get(Slot::Fc2W) * &a1 + bias(Slot::Fc2B);
    let a2 = z2.map(leaky_relu);
    let z3 = params.get(Slot::Fc3W) * &a2 + bias(Slot::Fc3B);
    let a3 = z3.map(leaky_relu);

    let pre = |w: Slot, u: Slot, b: Slot| -> DVector<f64> {
        params.get(w) * &a3 + params.get(u) * &rs.hidden + bias(b)
    };
    let gate_i = pre(Slot::WInput, Slot::UInput, Slot::BInput).map(sigmoid);
    let gate_f = pre(Slot::WForget, Slot::UForget, Slot::BForget).map(sigmoid);
    let gate_g = pre(Slot::WCell, Slot::UCell, Slot::BCell).map(f64::tanh);
    let gate_o = pre(Slot::WOutputGate, Slot::UOutputGate, Slot::BOutputGate).map(sigmoid);

    let c = gate_f.component_mul(&rs.cell) + gate_i.component_mul(&gate_g);
    let tanh_c = c.map(f64::tanh);
    let h = gate_o.component_mul(&tanh_c);

    let logits = params.get(Slot::OutW) * &h + bias(Slot::OutB);
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    let mut probs = [0.0; NUM_ACTIONS];
    for (p, e) in probs.iter_mut().zip(&exps) {
        *p = e / denom;
    }

    StepCache {
        x,
        z1,
        a1,
        z2,
        a2,
        z3,
        a3,
        h_prev: rs.hidden.clone(),
        c_prev: rs.cell.clone(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        c,
        tanh_c,
        h,
        probs,
    }
}

/// One step of the policy: action probabilities and the updated carry.
pub fn forward(
    params: &PolicyParams,
    state: &StateVector,
    rs: &RecurrentState,
) -> Result<([f64; NUM_ACTIONS], RecurrentState), PolicyError> {
    let cache = forward_cached(params, state, rs);
    if !cache.probs.iter().all(|p| p.is_finite())
        || !cache.h.iter().all(|v| v.is_finite())
        || !cache.c.iter().all(|v| v.is_finite())
    {
        return Err(PolicyError::NonFiniteActivation);
    }
    Ok((cache.probs, RecurrentState { hidden: cache.h, cell: cache.c }))
}

/// Categorical draw from the action distribution.
pub fn sample_action(probs: &[f64; NUM_ACTIONS], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    NUM_ACTIONS - 1
}

/// Moves a point by `eps2 * omega` image pixels in the action direction,
/// clamped to the ROI.
pub fn apply_action(
    p: (f64, f64),
    action: Action,
    eps2: f64,
    omega: f64,
    roi: &Roi,
) -> (f64, f64) {
    debug_assert!(eps2 > 0.0 && omega > 0.0);
    let step = eps2 * omega;
    let moved = match action {
        Action::Up => (p.0, p.1 - step),
        Action::Down => (p.0, p.1 + step),
        Action::Left => (p.0 - step, p.1),
        Action::Right => (p.0 + step, p.1),
    };
    roi.clamp_point(moved)
}
