//! Episode loss, backpropagation through time, and the policy update.

use nalgebra::{DMatrix, DVector};

use super::{
    forward_cached, leaky_relu_grad, PolicyError, PolicyParams, RecurrentState, Slot, StepCache,
    Trajectory, SLOT_SHAPES,
};

/// Per-tensor gradients, same layout as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    tensors: Vec<DMatrix<f64>>,
}

impl Gradients {
    pub fn zeros() -> Self {
        Gradients {
            tensors: SLOT_SHAPES.iter().map(|&(r, c)| DMatrix::zeros(r, c)).collect(),
        }
    }

    pub fn get(&self, slot: Slot) -> &DMatrix<f64> {
        &self.tensors[slot as usize]
    }

    /// Tensor by slot index, matching the parameter layout.
    pub fn tensor(&self, idx: usize) -> &DMatrix<f64> {
        &self.tensors[idx]
    }

    fn at(&mut self, slot: Slot) -> &mut DMatrix<f64> {
        &mut self.tensors[slot as usize]
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            *t *= factor;
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .fold(0.0, f64::max)
    }
}

/// Reports whether any Leaky-ReLU pre-activation changes sign between two
/// parameter settings when replaying `traj`. Finite-difference checks use
/// this to identify kink crossings, where the loss is one-sided and a central
/// difference measures neither slope.
pub fn relu_kink_between(a: &PolicyParams, b: &PolicyParams, traj: &Trajectory) -> bool {
    let signs = |params: &PolicyParams| -> Vec<bool> {
        let mut rs = RecurrentState::zeros();
        let mut out = Vec::new();
        for step in &traj.steps {
            let cache = forward_cached(params, &step.state, &rs);
            out.extend(cache.z1.iter().map(|&v| v > 0.0));
            out.extend(cache.z2.iter().map(|&v| v > 0.0));
            out.extend(cache.z3.iter().map(|&v| v > 0.0));
            rs = RecurrentState { hidden: cache.h, cell: cache.c };
        }
        out
    };
    signs(a) != signs(b)
}

/// Replays an episode and returns the REINFORCE loss
/// `-sum_t (r_t - baseline) * ln p(a_t | tau_t)`.
///
/// States and actions are data; only the probabilities depend on the
/// parameters. This is the function the gradients are checked against.
pub fn episode_loss(
    params: &PolicyParams,
    traj: &Trajectory,
    baseline: f64,
) -> Result<f64, PolicyError> {
    let mut rs = RecurrentState::zeros();
    let mut loss = 0.0;
    for step in &traj.steps {
        let cache = forward_cached(params, &step.state, &rs);
        let p = cache.probs[step.action];
        if !p.is_finite() || p <= 0.0 {
            return Err(PolicyError::NonFiniteActivation);
        }
        loss -= (step.reward - baseline) * p.ln();
        rs = RecurrentState { hidden: cache.h, cell: cache.c };
    }
    Ok(loss)
}

/// Loss and parameter gradients of one episode via backpropagation through
/// time.
pub fn episode_grads(
    params: &PolicyParams,
    traj: &Trajectory,
    baseline: f64,
) -> Result<(f64, Gradients), PolicyError> {
    let mut rs = RecurrentState::zeros();
    let mut caches: Vec<StepCache> = Vec::with_capacity(traj.len());
    let mut loss = 0.0;
    for step in &traj.steps {
        let cache = forward_cached(params, &step.state, &rs);
        let p = cache.probs[step.action];
        if !p.is_finite() || p <= 0.0 {
            return Err(PolicyError::NonFiniteActivation);
        }
        loss -= (step.reward - baseline) * p.ln();
        rs = RecurrentState { hidden: cache.h.clone(), cell: cache.c.clone() };
        caches.push(cache);
    }

    let mut grads = Gradients::zeros();
    let mut dh_next = DVector::zeros(super::HIDDEN);
    let mut dc_next = DVector::zeros(super::HIDDEN);

    for (step, cache) in traj.steps.iter().zip(&caches).rev() {
        let advantage = step.reward - baseline;

        // d loss / d logits = advantage * (p - onehot(a)).
        let mut dlogits = DVector::from_column_slice(&cache.probs);
        dlogits[step.action] -= 1.0;
        dlogits *= advantage;

        *grads.at(Slot::OutW) += &dlogits * cache.h.transpose();
        *grads.at(Slot::OutB) += &dlogits;
        let mut dh = params.get(Slot::OutW).transpose() * &dlogits + &dh_next;

        // LSTM cell backward.
        let ones = DVector::from_element(super::HIDDEN, 1.0);
        let dtanh = &ones - cache.tanh_c.component_mul(&cache.tanh_c);
        let mut dc = dc_next.clone();
        dc += dh.component_mul(&cache.gate_o).component_mul(&dtanh);
        let dgate_o = dh.component_mul(&cache.tanh_c);
        let dgate_i = dc.component_mul(&cache.gate_g);
        let dgate_g = dc.component_mul(&cache.gate_i);
        let dgate_f = dc.component_mul(&cache.c_prev);
        dc_next = dc.component_mul(&cache.gate_f);

        let sig_grad = |g: &DVector<f64>| g.component_mul(&(&ones - g));
        let dz_i = dgate_i.component_mul(&sig_grad(&cache.gate_i));
        let dz_f = dgate_f.component_mul(&sig_grad(&cache.gate_f));
        let dz_g = dgate_g.component_mul(&(&ones - cache.gate_g.component_mul(&cache.gate_g)));
        let dz_o = dgate_o.component_mul(&sig_grad(&cache.gate_o));

        let mut da3: DVector<f64> = DVector::zeros(super::HIDDEN);
        dh = DVector::zeros(super::HIDDEN);
        for (w, u, b, dz) in [
            (Slot::WInput, Slot::UInput, Slot::BInput, &dz_i),
            (Slot::WForget, Slot::UForget, Slot::BForget, &dz_f),
            (Slot::WCell, Slot::UCell, Slot::BCell, &dz_g),
            (Slot::WOutputGate, Slot::UOutputGate, Slot::BOutputGate, &dz_o),
        ] {
            *grads.at(w) += dz * cache.a3.transpose();
            *grads.at(u) += dz * cache.h_prev.transpose();
            *grads.at(b) += dz;
            da3 += params.get(w).transpose() * dz;
            dh += params.get(u).transpose() * dz;
        }
        dh_next = dh;

        // Fully connected stack backward.
        let dz3 = da3.zip_map(&cache.z3, |d, z| d * leaky_relu_grad(z));
        *grads.at(Slot::Fc3W) += &dz3 * cache.a2.transpose();
        *grads.at(Slot::Fc3B) += &dz3;
        let da2 = params.get(Slot::Fc3W).transpose() * &dz3;

        let dz2 = da2.zip_map(&cache.z2, |d, z| d * leaky_relu_grad(z));
        *grads.at(Slot::Fc2W) += &dz2 * cache.a1.transpose();
        *grads.at(Slot::Fc2B) += &dz2;
        let da1 = params.get(Slot::Fc2W).transpose() * &dz2;

        let dz1 = da1.zip_map(&cache.z1, |d, z| d * leaky_relu_grad(z));
        *grads.at(Slot::Fc1W) += &dz1 * cache.x.transpose();
        *grads.at(Slot::Fc1B) += &dz1;
    }

    Ok((loss, grads))
}

/// How much future reward each action is credited with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreditMode {
    /// Weight each step by its own stage reward.
    PerStepReward,
    /// Weight each step by the sum of its stage reward and all later ones,
    /// the standard estimator for maximizing the summed stage rewards.
    RewardsToGo,
}

/// Update hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct UpdateConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Momentum of the running-mean reward baseline.
    pub baseline_momentum: f64,
    pub credit: CreditMode,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            learning_rate: 1e-3,
            clip_norm: 5.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            baseline_momentum: 0.9,
            credit: CreditMode::PerStepReward,
        }
    }
}

/// Adaptive-moment accumulator plus the reward baseline.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    step: u64,
    pub baseline: f64,
}

impl AdamState {
    pub fn new() -> Self {
        AdamState {
            m: SLOT_SHAPES.iter().map(|&(r, c)| DMatrix::zeros(r, c)).collect(),
            v: SLOT_SHAPES.iter().map(|&(r, c)| DMatrix::zeros(r, c)).collect(),
            step: 0,
            baseline: 0.0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of one batch update, for training logs.
#[derive(Debug, Clone, Copy)]
pub struct UpdateStats {
    pub loss: f64,
    pub grad_norm: f64,
    pub clipped: bool,
    pub baseline: f64,
}

/// Rewrites step rewards into per-step credit weights.
fn credited(traj: &Trajectory, credit: CreditMode) -> Trajectory {
    match credit {
        CreditMode::PerStepReward => traj.clone(),
        CreditMode::RewardsToGo => {
            let mut out = traj.clone();
            let mut to_go = 0.0;
            for step in out.steps.iter_mut().rev() {
                to_go += step.reward;
                step.reward = to_go;
            }
            out
        }
    }
}

/// One REINFORCE batch update: mean episode gradient, global-norm clipping,
/// adaptive-moment step, then re-quantization of the parameters.
///
/// The baseline used for every episode in the batch is the running mean (of
/// the credit weights) as it stood before this update.
pub fn reinforce_update(
    params: &mut PolicyParams,
    batch: &[Trajectory],
    opt: &mut AdamState,
    cfg: &UpdateConfig,
) -> Result<UpdateStats, PolicyError> {
    assert!(!batch.is_empty(), "empty trajectory batch");
    let baseline = opt.baseline;

    let mut total = Gradients::zeros();
    let mut total_loss = 0.0;
    let mut reward_sum = 0.0;
    let mut reward_count = 0usize;
    for traj in batch {
        let traj = credited(traj, cfg.credit);
        let (loss, grads) = episode_grads(params, &traj, baseline)?;
        total.add(&grads);
        total_loss += loss;
        for step in &traj.steps {
            reward_sum += step.reward;
            reward_count += 1;
        }
    }
    total.scale(1.0 / batch.len() as f64);
    if !total.is_finite() {
        return Err(PolicyError::NonFiniteGradient);
    }

    let grad_norm = total.global_norm();
    let clipped = grad_norm > cfg.clip_norm;
    if clipped {
        total.scale(cfg.clip_norm / grad_norm);
    }

    opt.step += 1;
    let bias1 = 1.0 - cfg.beta1.powi(opt.step as i32);
    let bias2 = 1.0 - cfg.beta2.powi(opt.step as i32);
    for ((m, v), (g, p)) in opt
        .m
        .iter_mut()
        .zip(&mut opt.v)
        .zip(total.tensors.iter().zip(params.tensors_mut()))
    {
        for ((m, v), (g, p)) in
            m.iter_mut().zip(v.iter_mut()).zip(g.iter().zip(p.iter_mut()))
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    params.quantize();
    if !params.is_finite() {
        return Err(PolicyError::NonFiniteGradient);
    }

    if reward_count > 0 {
        let mean_reward = reward_sum / reward_count as f64;
        opt.baseline =
            cfg.baseline_momentum * baseline + (1.0 - cfg.baseline_momentum) * mean_reward;
    }

    Ok(UpdateStats {
        loss: total_loss / batch.len() as f64,
        grad_norm,
        clipped,
        baseline: opt.baseline,
    })
}
