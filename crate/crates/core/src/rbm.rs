//! Restricted Boltzmann machine: energy model, conditionals, Gibbs
//! sampling, and contrastive-divergence training.
//!
//! The energy of a joint state is
//!
//! `E(v, h) = -sum_s b_v[s] v[s] - sum_t b_h[t] h[t] - sum_st v[s] h[t] w[s][t]`
//!
//! which is linear in the visible units; real-valued inputs in [0, 1] are
//! treated as Bernoulli probabilities in the positive phase
//! ([`VisibleKind::BernoulliReal`]). [`Rbm::joint_probability_exact`]
//! normalizes by a brute-force partition function and exists purely as a
//! validation oracle for tiny machines.

use crate::rng::{self, Rng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RbmError {
    #[error("vector length {got} does not match expected {expected} ({role})")]
    DimensionMismatch {
        role: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("layer sizes must be positive")]
    EmptyLayer,
    #[error("exact enumeration needs n_visible + n_hidden <= {cap}, got {got}")]
    EnumerationTooLarge { cap: usize, got: usize },
    #[error("exact probabilities require bernoulli visible units and binary states")]
    NotBinary,
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite parameter encountered during training (epoch {0})")]
    NonFinite(usize),
}

/// Visible-unit model. `BernoulliReal` matches the linear energy exactly;
/// `Gaussian` swaps the reconstruction conditional for the unit-variance
/// mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibleKind {
    BernoulliReal,
    Gaussian,
}

impl VisibleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VisibleKind::BernoulliReal => "bernoulli",
            VisibleKind::Gaussian => "gaussian",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "bernoulli" => Some(VisibleKind::BernoulliReal),
            "gaussian" => Some(VisibleKind::Gaussian),
            _ => None,
        }
    }
}

/// One visible/hidden bilayer. Weights are row-major `n_visible x n_hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub weights: Vec<f64>,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub visible_kind: VisibleKind,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// log(1 + e^x) without overflow for large |x|.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Rbm {
    /// Fresh machine: i.i.d. N(0, 0.01^2) weights, zero biases.
    pub fn new(
        n_visible: usize,
        n_hidden: usize,
        visible_kind: VisibleKind,
        seed: u64,
    ) -> Result<Self, RbmError> {
        if n_visible == 0 || n_hidden == 0 {
            return Err(RbmError::EmptyLayer);
        }
        let mut r = rng::seeded(seed);
        let weights = (0..n_visible * n_hidden)
            .map(|_| 0.01 * rng::standard_normal(&mut r))
            .collect();
        Ok(Self {
            n_visible,
            n_hidden,
            weights,
            visible_bias: vec![0.0; n_visible],
            hidden_bias: vec![0.0; n_hidden],
            visible_kind,
        })
    }

    fn check_v(&self, v: &[f64]) -> Result<(), RbmError> {
        if v.len() != self.n_visible {
            return Err(RbmError::DimensionMismatch {
                role: "visible",
                expected: self.n_visible,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_h(&self, h: &[f64]) -> Result<(), RbmError> {
        if h.len() != self.n_hidden {
            return Err(RbmError::DimensionMismatch {
                role: "hidden",
                expected: self.n_hidden,
                got: h.len(),
            });
        }
        Ok(())
    }

    fn weight_row(&self, s: usize) -> &[f64] {
        &self.weights[s * self.n_hidden..(s + 1) * self.n_hidden]
    }

    /// Joint energy E(v, h) of the configuration.
    pub fn energy(&self, v: &[f64], h: &[f64]) -> Result<f64, RbmError> {
        self.check_v(v)?;
        self.check_h(h)?;
        let mut e = 0.0;
        for (b, x) in self.visible_bias.iter().zip(v) {
            e -= b * x;
        }
        for (b, x) in self.hidden_bias.iter().zip(h) {
            e -= b * x;
        }
        for (s, &vs) in v.iter().enumerate() {
            if vs != 0.0 {
                for (w, ht) in self.weight_row(s).iter().zip(h) {
                    e -= vs * ht * w;
                }
            }
        }
        Ok(e)
    }

    /// `P(h[t] = 1 | v) = sigmoid(b_h[t] + sum_s v[s] w[s][t])`.
    pub fn prob_h_given_v(&self, v: &[f64]) -> Result<Vec<f64>, RbmError> {
        self.check_v(v)?;
        let mut act = self.hidden_bias.clone();
        for (s, &vs) in v.iter().enumerate() {
            if vs != 0.0 {
                for (a, w) in act.iter_mut().zip(self.weight_row(s)) {
                    *a += vs * w;
                }
            }
        }
        for a in &mut act {
            *a = sigmoid(*a);
        }
        Ok(act)
    }

    /// Reconstruction conditional. Bernoulli visibles give
    /// `sigmoid(b_v[s] + sum_t h[t] w[s][t])`; Gaussian visibles give the
    /// mean `b_v[s] + sum_t h[t] w[s][t]`.
    pub fn prob_v_given_h(&self, h: &[f64]) -> Result<Vec<f64>, RbmError> {
        self.check_h(h)?;
        let mut out = Vec::with_capacity(self.n_visible);
        for s in 0..self.n_visible {
            let mut a = self.visible_bias[s];
            for (w, ht) in self.weight_row(s).iter().zip(h) {
                a += ht * w;
            }
            out.push(match self.visible_kind {
                VisibleKind::BernoulliReal => sigmoid(a),
                VisibleKind::Gaussian => a,
            });
        }
        Ok(out)
    }

    /// `F(v) = -sum_s b_v[s] v[s] - sum_t softplus(b_h[t] + sum_s v[s] w[s][t])`,
    /// the marginal of the energy over all hidden states.
    pub fn free_energy(&self, v: &[f64]) -> Result<f64, RbmError> {
        self.check_v(v)?;
        let mut f = 0.0;
        for (b, x) in self.visible_bias.iter().zip(v) {
            f -= b * x;
        }
        let mut act = self.hidden_bias.clone();
        for (s, &vs) in v.iter().enumerate() {
            if vs != 0.0 {
                for (a, w) in act.iter_mut().zip(self.weight_row(s)) {
                    *a += vs * w;
                }
            }
        }
        for a in act {
            f -= softplus(a);
        }
        Ok(f)
    }

    /// Partition function by exhaustive enumeration of every joint state.
    /// Only valid for bernoulli machines with `n_visible + n_hidden <= 20`.
    pub fn partition_function_exact(&self) -> Result<f64, RbmError> {
        self.ensure_enumerable()?;
        let mut v = vec![0.0; self.n_visible];
        let mut h = vec![0.0; self.n_hidden];
        let mut z = 0.0;
        for vbits in 0u32..(1 << self.n_visible) {
            for (s, vs) in v.iter_mut().enumerate() {
                *vs = ((vbits >> s) & 1) as f64;
            }
            for hbits in 0u32..(1 << self.n_hidden) {
                for (t, ht) in h.iter_mut().enumerate() {
                    *ht = ((hbits >> t) & 1) as f64;
                }
                z += (-self.energy(&v, &h).unwrap()).exp();
            }
        }
        Ok(z)
    }

    /// `P(v, h) = exp(-E(v, h)) / Z` with brute-force Z. Oracle only.
    pub fn joint_probability_exact(&self, v: &[f64], h: &[f64]) -> Result<f64, RbmError> {
        self.check_v(v)?;
        self.check_h(h)?;
        if !v.iter().chain(h).all(|&x| x == 0.0 || x == 1.0) {
            return Err(RbmError::NotBinary);
        }
        let z = self.partition_function_exact()?;
        Ok((-self.energy(v, h)?).exp() / z)
    }

    fn ensure_enumerable(&self) -> Result<(), RbmError> {
        const CAP: usize = 20;
        if self.visible_kind != VisibleKind::BernoulliReal {
            return Err(RbmError::NotBinary);
        }
        let total = self.n_visible + self.n_hidden;
        if total > CAP {
            return Err(RbmError::EnumerationTooLarge {
                cap: CAP,
                got: total,
            });
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
            && self.visible_bias.iter().all(|b| b.is_finite())
            && self.hidden_bias.iter().all(|b| b.is_finite())
    }
}

/// Draws a binary vector; element t is 1 with probability `probs[t]`.
pub fn sample_bernoulli(probs: &[f64], rng: &mut Rng) -> Result<Vec<f64>, RbmError> {
    let mut out = Vec::with_capacity(probs.len());
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(RbmError::ProbabilityOutOfRange(p));
        }
        out.push(if rng::uniform(rng) < p { 1.0 } else { 0.0 });
    }
    Ok(out)
}

/// CD-k statistics for one mini-batch, averaged over the batch.
#[derive(Debug, Clone)]
pub struct CdGradient {
    pub d_weights: Vec<f64>,
    pub d_visible_bias: Vec<f64>,
    pub d_hidden_bias: Vec<f64>,
    /// Mean squared error between the data and its k-step reconstruction.
    pub recon_error: f64,
}

/// Contrastive-divergence gradient estimate.
///
/// Positive phase pairs each data vector with its hidden probabilities.
/// The negative phase runs k alternating Gibbs steps: hidden states are
/// sampled binary along the chain, visible reconstructions stay as
/// probabilities, and the final hidden term uses probabilities rather
/// than samples.
pub fn cd_gradient(
    rbm: &Rbm,
    batch: &[&[f64]],
    cd_steps: usize,
    rng: &mut Rng,
) -> Result<CdGradient, RbmError> {
    if batch.is_empty() {
        return Err(RbmError::EmptyBatch);
    }
    if cd_steps == 0 {
        return Err(RbmError::InvalidConfig("cd_steps must be >= 1".into()));
    }
    let (nv, nh) = (rbm.n_visible, rbm.n_hidden);
    let mut dw = vec![0.0; nv * nh];
    let mut dbv = vec![0.0; nv];
    let mut dbh = vec![0.0; nh];
    let mut sq_err = 0.0;

    for &v in batch {
        let h_pos = rbm.prob_h_given_v(v)?;

        let mut h_state = sample_bernoulli(&h_pos, rng)?;
        let mut v_recon = rbm.prob_v_given_h(&h_state)?;
        let mut h_neg = rbm.prob_h_given_v(&v_recon)?;
        for _ in 1..cd_steps {
            h_state = sample_bernoulli(&h_neg, rng)?;
            v_recon = rbm.prob_v_given_h(&h_state)?;
            h_neg = rbm.prob_h_given_v(&v_recon)?;
        }

        for s in 0..nv {
            let (pos, neg) = (v[s], v_recon[s]);
            let row = &mut dw[s * nh..(s + 1) * nh];
            for (t, d) in row.iter_mut().enumerate() {
                *d += pos * h_pos[t] - neg * h_neg[t];
            }
            dbv[s] += pos - neg;
            let diff = pos - neg;
            sq_err += diff * diff;
        }
        for t in 0..nh {
            dbh[t] += h_pos[t] - h_neg[t];
        }
    }

    let scale = 1.0 / batch.len() as f64;
    dw.iter_mut().for_each(|x| *x *= scale);
    dbv.iter_mut().for_each(|x| *x *= scale);
    dbh.iter_mut().for_each(|x| *x *= scale);
    Ok(CdGradient {
        d_weights: dw,
        d_visible_bias: dbv,
        d_hidden_bias: dbh,
        recon_error: sq_err * scale / nv as f64,
    })
}

/// Contrastive-divergence hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub cd_steps: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_epoch: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for RbmTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 10,
            cd_steps: 1,
            momentum_initial: 0.5,
            momentum_final: 0.9,
            momentum_switch_epoch: 5,
            weight_decay: 2e-4,
            seed: 0,
        }
    }
}

impl RbmTrainConfig {
    pub fn validate(&self) -> Result<(), RbmError> {
        let fail = |msg: &str| Err(RbmError::InvalidConfig(msg.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1");
        }
        if self.cd_steps == 0 {
            return fail("cd_steps must be >= 1");
        }
        for (name, m) in [
            ("momentum_initial", self.momentum_initial),
            ("momentum_final", self.momentum_final),
        ] {
            if !(0.0..1.0).contains(&m) {
                return fail(&format!("{name} must lie in [0, 1)"));
            }
        }
        if self.momentum_switch_epoch == 0 {
            return fail("momentum_switch_epoch must be >= 1");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail("weight_decay must be nonnegative");
        }
        Ok(())
    }
}

/// Mini-batch CD training. Momentum switches from `momentum_initial` to
/// `momentum_final` at `momentum_switch_epoch` (1-based); weight decay
/// applies to the weight matrix only. Returns the trained machine and the
/// mean squared reconstruction error per epoch.
pub fn train_rbm(
    mut rbm: Rbm,
    data: &[Vec<f64>],
    cfg: &RbmTrainConfig,
) -> Result<(Rbm, Vec<f64>), RbmError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(RbmError::EmptyBatch);
    }
    for v in data {
        rbm.check_v(v)?;
    }

    let mut r = rng::seeded(cfg.seed);
    let (nv, nh) = (rbm.n_visible, rbm.n_hidden);
    let mut vel_w = vec![0.0; nv * nh];
    let mut vel_bv = vec![0.0; nv];
    let mut vel_bh = vec![0.0; nh];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let momentum = if epoch >= cfg.momentum_switch_epoch {
            cfg.momentum_final
        } else {
            cfg.momentum_initial
        };
        rng::shuffle(&mut r, &mut order);

        let mut epoch_err = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            let grad = cd_gradient(&rbm, &batch, cfg.cd_steps, &mut r)?;

            for ((w, vel), (g, _)) in rbm
                .weights
                .iter_mut()
                .zip(vel_w.iter_mut())
                .zip(grad.d_weights.iter().zip(0..))
            {
                *vel = momentum * *vel + cfg.learning_rate * (g - cfg.weight_decay * *w);
                *w += *vel;
            }
            for ((b, vel), g) in rbm
                .visible_bias
                .iter_mut()
                .zip(vel_bv.iter_mut())
                .zip(&grad.d_visible_bias)
            {
                *vel = momentum * *vel + cfg.learning_rate * g;
                *b += *vel;
            }
            for ((b, vel), g) in rbm
                .hidden_bias
                .iter_mut()
                .zip(vel_bh.iter_mut())
                .zip(&grad.d_hidden_bias)
            {
                *vel = momentum * *vel + cfg.learning_rate * g;
                *b += *vel;
            }
            epoch_err += grad.recon_error * chunk.len() as f64;
            seen += chunk.len();
        }
        if !rbm.all_finite() {
            return Err(RbmError::NonFinite(epoch));
        }
        trace.push(epoch_err / seen as f64);
    }
    Ok((rbm, trace))
}
