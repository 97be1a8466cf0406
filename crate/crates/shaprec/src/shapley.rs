//! Interaction valuation with Shapley values.
//!
//! Four pieces:
//!
//! 1. An exact brute-force oracle over small cooperative games, used to
//!    verify everything else.
//! 2. The value function over a frozen DAE: `v(S)` is the mean predicted
//!    score across a user's observed items when only the subset `S` of the
//!    input is kept.
//! 3. A subset sampler for the Shapley kernel
//!    `p(S) ∝ (N−1) / (C(N,|S|) · |S| · (N−|S|))`.
//! 4. An amortized explainer: an MLP trained with a weighted least-squares
//!    objective so one forward pass yields per-item Shapley estimates,
//!    with additive efficient normalization applied inside the loss so the
//!    efficiency identity `1ᵀφ = v(1) − v(0)` holds by construction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::InteractionCorpus;
use crate::dae::DaeModel;
use crate::error::{Error, Result};
use crate::numerics::checkpoint::{read_checkpoint, write_checkpoint, Block, Checkpoint};
use crate::numerics::{adam_step, affine, relu, xavier_init, AdamState, DenseMatrix, Rng};

const EXPLAINER_STREAM: u64 = 0x455850;

/// Enumeration guard for the exact oracle (2^20 ≈ 10^6 evaluations).
pub const EXACT_PLAYER_GUARD: usize = 20;

/// A cooperative game: a deterministic value for every coalition mask.
pub trait CoalitionGame {
    fn n_players(&self) -> usize;
    fn evaluate(&self, mask: &[bool]) -> f64;
}

/// Game defined by an explicit table indexed by coalition bitmask.
/// Handy for tests and small demonstrations.
#[derive(Debug, Clone)]
pub struct TableGame {
    n_players: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n_players: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1 << n_players);
        TableGame { n_players, values }
    }

    pub fn from_fn(n_players: usize, f: impl Fn(usize) -> f64) -> Self {
        let values = (0..1usize << n_players).map(f).collect();
        TableGame { n_players, values }
    }
}

impl CoalitionGame for TableGame {
    fn n_players(&self) -> usize {
        self.n_players
    }

    fn evaluate(&self, mask: &[bool]) -> f64 {
        let mut idx = 0usize;
        for (i, &bit) in mask.iter().enumerate() {
            if bit {
                idx |= 1 << i;
            }
        }
        self.values[idx]
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    // exact in f64 for n ≤ 20
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Exact Shapley values by full subset enumeration:
/// `φ_i = (1/n) Σ_{S ∌ i} C(n−1, |S|)⁻¹ (v(S ∪ i) − v(S))`.
///
/// Every coalition is evaluated exactly once.
pub fn exact_shapley(game: &impl CoalitionGame) -> Result<Vec<f64>> {
    let n = game.n_players();
    if n > EXACT_PLAYER_GUARD {
        return Err(Error::TooManyPlayers {
            max: EXACT_PLAYER_GUARD,
            got: n,
        });
    }
    assert!(n >= 1);
    let size = 1usize << n;
    let mut values = vec![0.0; size];
    let mut mask = vec![false; n];
    for m in 0..size {
        for (i, slot) in mask.iter_mut().enumerate() {
            *slot = m & (1 << i) != 0;
        }
        values[m] = game.evaluate(&mask);
    }
    let inv_n = 1.0 / n as f64;
    // weight per coalition size, reused across masks
    let weights: Vec<f64> = (0..n).map(|s| inv_n / binomial(n - 1, s)).collect();
    let mut phi = vec![0.0; n];
    for m in 0..size {
        let s = (m as u64).count_ones() as usize;
        if s == n {
            continue;
        }
        let w = weights[s];
        for (i, p) in phi.iter_mut().enumerate() {
            if m & (1 << i) == 0 {
                *p += w * (values[m | (1 << i)] - values[m]);
            }
        }
    }
    Ok(phi)
}

/// The DAE-backed value function for one user.
///
/// `v(S)` = mean predicted score over the user's observed items when the
/// input is `r ⊙ S`. Evaluation uses the sparse encoder/decoder fast path,
/// which is bit-identical to the dense forward pass on 0/1 inputs.
pub struct InteractionValueFunction<'a> {
    model: &'a DaeModel,
    observed: Vec<usize>,
}

impl<'a> InteractionValueFunction<'a> {
    pub fn new(model: &'a DaeModel, r: &[f64]) -> Result<Self> {
        assert_eq!(r.len(), model.n_items());
        let observed: Vec<usize> = (0..r.len()).filter(|&v| r[v] == 1.0).collect();
        if observed.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(InteractionValueFunction { model, observed })
    }

    pub fn degree(&self) -> usize {
        self.observed.len()
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    fn mean_over_observed(&self, active_inputs: &[usize]) -> f64 {
        let hidden = self.model.encode_active(active_inputs);
        let mut acc = 0.0;
        for &v in &self.observed {
            acc += self.model.decode_at(&hidden, v);
        }
        acc / self.observed.len() as f64
    }

    /// `v(S)` for a mask over the full item space.
    pub fn evaluate_mask(&self, keep: &[bool]) -> f64 {
        let active: Vec<usize> = self
            .observed
            .iter()
            .copied()
            .filter(|&v| keep[v])
            .collect();
        self.mean_over_observed(&active)
    }

    /// `v(1)`: every observed interaction kept in the input.
    pub fn full_value(&self) -> f64 {
        self.mean_over_observed(&self.observed)
    }

    /// `v(0)`: the empty-coalition value, i.e. the model's mean output on
    /// the all-zero input at this user's observed positions.
    pub fn empty_value(&self) -> f64 {
        self.mean_over_observed(&[])
    }

    /// `v(1) − v(0)`, the gap the efficiency identity distributes.
    pub fn gap(&self) -> f64 {
        self.full_value() - self.empty_value()
    }
}

/// View of the value function as a game over the observed items only.
/// Non-observed items are null players (toggling them never changes the
/// masked input), so restricting the player set loses nothing.
pub struct ObservedGame<'a> {
    vf: &'a InteractionValueFunction<'a>,
}

impl<'a> ObservedGame<'a> {
    pub fn new(vf: &'a InteractionValueFunction<'a>) -> Self {
        ObservedGame { vf }
    }
}

impl CoalitionGame for ObservedGame<'_> {
    fn n_players(&self) -> usize {
        self.vf.degree()
    }

    fn evaluate(&self, mask: &[bool]) -> f64 {
        let active: Vec<usize> = self
            .vf
            .observed
            .iter()
            .zip(mask)
            .filter(|(_, &keep)| keep)
            .map(|(&v, _)| v)
            .collect();
        self.vf.mean_over_observed(&active)
    }
}

/// `v(S)` from raw parts; see [`InteractionValueFunction::evaluate_mask`].
pub fn value_function(model: &DaeModel, r: &[f64], keep: &[bool]) -> Result<f64> {
    let vf = InteractionValueFunction::new(model, r)?;
    Ok(vf.evaluate_mask(keep))
}

/// One kernel-distributed coalition mask (never empty, never full).
#[derive(Debug, Clone)]
pub struct SubsetSample {
    pub mask: Vec<bool>,
    pub size: usize,
}

/// Unnormalized size marginal of the Shapley kernel: aggregating
/// `p(S) ∝ (n−1)/(C(n,m)·m·(n−m))` over the `C(n,m)` subsets of size `m`
/// leaves `(n−1)/(m·(n−m))`.
fn size_weights(n: usize) -> Vec<f64> {
    (1..n)
        .map(|m| (n - 1) as f64 / ((m * (n - m)) as f64))
        .collect()
}

/// Probability the sampler assigns to one specific subset of size `m`.
pub fn per_subset_probability(n: usize, m: usize) -> f64 {
    assert!(m >= 1 && m < n);
    let weights = size_weights(n);
    let total: f64 = weights.iter().sum();
    weights[m - 1] / total / binomial(n, m)
}

/// Draw a coalition from the Shapley kernel: size `m` with probability
/// ∝ (n−1)/(m(n−m)), then a uniform subset of that size.
pub fn sample_subset(n: usize, rng: &mut Rng) -> Result<SubsetSample> {
    if n < 2 {
        return Err(Error::TooFewPlayers { got: n });
    }
    let weights = size_weights(n);
    let total: f64 = weights.iter().sum();
    let mut x = rng.next_f64() * total;
    let mut size = 1;
    for (idx, w) in weights.iter().enumerate() {
        if x < *w || idx == weights.len() - 1 {
            size = idx + 1;
            break;
        }
        x -= w;
    }
    let mut mask = vec![false; n];
    for i in rng.choose_k(n, size) {
        mask[i] = true;
    }
    Ok(SubsetSample { mask, size })
}

/// Additive efficient normalization: shift every coordinate by the
/// per-dimension share of the efficiency gap, so `1ᵀφ' = gap` exactly.
pub fn normalize_efficient(phi: &[f64], gap: f64) -> Vec<f64> {
    let sum: f64 = phi.iter().sum();
    let shift = (gap - sum) / phi.len() as f64;
    phi.iter().map(|&p| p + shift).collect()
}

/// Amortized per-item valuation network.
///
/// Input is the user's multi-hot vector concatenated with the base model's
/// prediction vector for it — the prediction features carry most of the
/// signal that separates odd interactions from a user's usual pattern.
/// ReLU hidden layers, linear output of width N (values may be negative).
#[derive(Debug, Clone)]
pub struct ShapleyExplainer {
    /// (weights, bias) per layer, input to output.
    layers: Vec<(DenseMatrix, Vec<f64>)>,
    trained: bool,
}

/// Explainer input features for one user: `[r ; f(r)]`.
pub fn explainer_features(model: &DaeModel, r: &[f64]) -> Result<Vec<f64>> {
    let mut features = r.to_vec();
    features.extend(model.forward(r)?);
    Ok(features)
}

impl ShapleyExplainer {
    /// Fresh network with the given hidden widths (input width 2N for the
    /// `[r ; f(r)]` features, output width N).
    pub fn init(n_items: usize, hidden: &[usize], rng: &mut Rng) -> Self {
        assert!(!hidden.is_empty());
        let mut widths = vec![2 * n_items];
        widths.extend_from_slice(hidden);
        widths.push(n_items);
        let layers = widths
            .windows(2)
            .map(|w| (xavier_init(w[1], w[0], rng), vec![0.0; w[1]]))
            .collect();
        ShapleyExplainer {
            layers,
            trained: false,
        }
    }

    pub fn n_items(&self) -> usize {
        self.layers[self.layers.len() - 1].0.rows()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|(w, _)| w.rows())
            .collect()
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Raw per-item outputs (no normalization, no masking) from `[r ; f(r)]`
    /// features.
    pub fn forward(&self, features: &[f64]) -> Vec<f64> {
        let mut a = features.to_vec();
        let last = self.layers.len() - 1;
        for (idx, (w, b)) in self.layers.iter().enumerate() {
            let z = affine(w, &a, b).expect("explainer layer dimensions are consistent");
            a = if idx < last { relu(&z) } else { z };
        }
        a
    }

    /// Forward pass keeping pre-activations and activations for backprop.
    fn forward_cached(&self, features: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = Vec::with_capacity(self.layers.len() + 1);
        act.push(features.to_vec());
        let last = self.layers.len() - 1;
        for (idx, (w, b)) in self.layers.iter().enumerate() {
            let z = affine(w, act.last().unwrap(), b).expect("explainer layer dims");
            let a = if idx < last { relu(&z) } else { z.clone() };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    pub fn save(&self, path: &Path, extra_header: &[(String, String)]) -> Result<()> {
        let widths: Vec<String> = self.hidden_widths().iter().map(|w| w.to_string()).collect();
        let mut header = vec![
            ("kind".to_string(), "explainer".to_string()),
            ("n_items".to_string(), self.n_items().to_string()),
            ("hidden".to_string(), widths.join(",")),
            ("activation".to_string(), "relu".to_string()),
            ("output".to_string(), "linear".to_string()),
            ("trained".to_string(), self.trained.to_string()),
        ];
        header.extend_from_slice(extra_header);
        let mut blocks = Vec::new();
        for (idx, (w, b)) in self.layers.iter().enumerate() {
            blocks.push(Block::matrix(format!("w{idx}"), w));
            blocks.push(Block::vector(format!("b{idx}"), b));
        }
        write_checkpoint(path, &Checkpoint { header, blocks })
    }

    pub fn load(path: &Path) -> Result<ShapleyExplainer> {
        let ckpt = read_checkpoint(path)?;
        let malformed = |message: String| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message,
        };
        if ckpt.header_value("kind") != Some("explainer") {
            return Err(malformed("not an explainer checkpoint".to_string()));
        }
        let n_layers = ckpt.blocks.len() / 2;
        let mut layers = Vec::with_capacity(n_layers);
        for idx in 0..n_layers {
            let w = ckpt
                .block(&format!("w{idx}"))
                .ok_or_else(|| malformed(format!("missing block w{idx}")))?
                .to_matrix();
            let b = ckpt
                .block(&format!("b{idx}"))
                .ok_or_else(|| malformed(format!("missing block b{idx}")))?
                .data
                .clone();
            layers.push((w, b));
        }
        if layers.is_empty() {
            return Err(malformed("no layers".to_string()));
        }
        let trained = ckpt.header_value("trained") == Some("true");
        Ok(ShapleyExplainer { layers, trained })
    }
}

/// Explainer training hyperparameters.
#[derive(Debug, Clone)]
pub struct ExplainerConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Kernel subset samples per user per optimization step.
    pub subsets_per_step: usize,
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            hidden: vec![256, 256, 256],
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 32,
            subsets_per_step: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExplainerEpoch {
    pub epoch: usize,
    /// Mean squared kernel-regression residual.
    pub mean_loss: f64,
}

#[derive(Debug)]
pub struct ExplainerOutcome {
    pub explainer: ShapleyExplainer,
    pub trace: Vec<ExplainerEpoch>,
}

struct LayerGrads {
    w: Vec<DenseMatrix>,
    b: Vec<Vec<f64>>,
}

impl LayerGrads {
    fn zeros(explainer: &ShapleyExplainer) -> Self {
        LayerGrads {
            w: explainer
                .layers
                .iter()
                .map(|(w, _)| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            b: explainer.layers.iter().map(|(_, b)| vec![0.0; b.len()]).collect(),
        }
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }
}

/// One user's loss and gradient accumulation over a fixed set of evaluated
/// coalitions. `evaluated` pairs each mask with its value `v(S)`; the loss
/// is the mean squared residual, with the additive normalization applied
/// inside (so its `δ_ij − 1/N` Jacobian is part of the backward pass).
fn user_backward(
    explainer: &ShapleyExplainer,
    features: &[f64],
    gap: f64,
    v0: f64,
    evaluated: &[(&[bool], f64)],
    scale: f64,
    grads: &mut LayerGrads,
) -> f64 {
    let n = explainer.n_items();
    let inv_t = 1.0 / evaluated.len() as f64;
    let (pre, act) = explainer.forward_cached(features);
    let phi = normalize_efficient(act.last().unwrap(), gap);

    let mut g_norm = vec![0.0; n];
    let mut loss = 0.0;
    for (mask, v_s) in evaluated {
        let mut dot = 0.0;
        for (i, &keep) in mask.iter().enumerate() {
            if keep {
                dot += phi[i];
            }
        }
        let residual = v_s - v0 - dot;
        loss += residual * residual;
        let coeff = -2.0 * residual * inv_t;
        for (i, &keep) in mask.iter().enumerate() {
            if keep {
                g_norm[i] += coeff;
            }
        }
    }
    loss *= inv_t;

    // Through the normalization: ∂φ̄_j/∂φ_i = δ_ij − 1/N.
    let mean_g: f64 = g_norm.iter().sum::<f64>() / n as f64;
    let mut delta: Vec<f64> = g_norm.iter().map(|&g| g - mean_g).collect();

    let last = explainer.layers.len() - 1;
    for idx in (0..=last).rev() {
        grads.w[idx].add_outer(&delta, &act[idx], scale);
        for (slot, &d) in grads.b[idx].iter_mut().zip(&delta) {
            *slot += scale * d;
        }
        if idx > 0 {
            let back = explainer.layers[idx].0.transpose_matvec(&delta);
            delta = back
                .iter()
                .zip(&pre[idx - 1])
                .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
                .collect();
        }
    }
    loss
}

/// Minimize `E_r E_{S~p(S)} (v(S) − v(0) − Sᵀφ̄(r;θ))²` over mini-batches of
/// users, where `φ̄` is the additively normalized output, so efficiency
/// holds for every example by construction. The base model stays frozen.
/// Deterministic given `config.seed`.
///
/// Each drawn coalition is used together with its complement (the kernel
/// is symmetric, so the complement is an equally weighted sample); the
/// pair's residuals anti-correlate, which cuts gradient variance roughly
/// in half. The learning rate follows a cosine decay so the estimates
/// settle instead of hovering at the sampling-noise floor.
pub fn train_explainer(
    model: &DaeModel,
    view: &InteractionCorpus,
    config: &ExplainerConfig,
) -> Result<ExplainerOutcome> {
    if view.total_interactions() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let n = view.n_items();
    if n < 2 {
        return Err(Error::TooFewPlayers { got: n });
    }
    assert_eq!(model.n_items(), n, "model and corpus dimension mismatch");
    assert!(config.epochs >= 1 && config.batch_size >= 1 && config.subsets_per_step >= 1);

    let mut rng = Rng::new(config.seed).derive(EXPLAINER_STREAM);
    let mut explainer = ShapleyExplainer::init(n, &config.hidden, &mut rng);

    let active_users: Vec<usize> = (0..view.n_users()).filter(|&u| view.degree(u) > 0).collect();
    // per-user constants: the base model is frozen, so features and the
    // empty/full coalition values never change during training
    struct UserCtx<'a> {
        features: Vec<f64>,
        vf: InteractionValueFunction<'a>,
        v0: f64,
        gap: f64,
    }
    let contexts: Vec<UserCtx> = active_users
        .iter()
        .map(|&u| -> Result<UserCtx> {
            let r = view.user_vector(u)?;
            let features = explainer_features(model, &r)?;
            let vf = InteractionValueFunction::new(model, &r)?;
            let v0 = vf.empty_value();
            let gap = vf.full_value() - v0;
            Ok(UserCtx {
                features,
                vf,
                v0,
                gap,
            })
        })
        .collect::<Result<_>>()?;

    let mut adam: Vec<(AdamState, AdamState)> = explainer
        .layers
        .iter()
        .enumerate()
        .map(|(idx, (w, b))| {
            (
                AdamState::new(format!("explainer-w{idx}"), w.data().len(), config.learning_rate),
                AdamState::new(format!("explainer-b{idx}"), b.len(), config.learning_rate),
            )
        })
        .collect();

    let mut order: Vec<usize> = (0..contexts.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        // cosine decay from the configured rate toward zero
        let progress = epoch as f64 / config.epochs as f64;
        let lr = config.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        for (w_state, b_state) in adam.iter_mut() {
            w_state.learning_rate = lr;
            b_state.learning_rate = lr;
        }
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut epoch_users = 0usize;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = LayerGrads::zeros(&explainer);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &ctx_idx in batch {
                let ctx = &contexts[ctx_idx];
                // draw coalitions and evaluate the frozen game
                let mut masks: Vec<Vec<bool>> =
                    Vec::with_capacity(2 * config.subsets_per_step);
                for _ in 0..config.subsets_per_step {
                    let sample = sample_subset(n, &mut rng)?;
                    let complement = sample.mask.iter().map(|&k| !k).collect();
                    masks.push(sample.mask);
                    masks.push(complement);
                }
                let evaluated: Vec<(&[bool], f64)> = masks
                    .iter()
                    .map(|m| (m.as_slice(), ctx.vf.evaluate_mask(m)))
                    .collect();
                batch_loss +=
                    user_backward(&explainer, &ctx.features, ctx.gap, ctx.v0, &evaluated, scale, &mut grads);
                epoch_users += 1;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += batch_loss;
            for (idx, (w, b)) in explainer.layers.iter_mut().enumerate() {
                adam_step(w.data_mut(), grads.w[idx].data(), &mut adam[idx].0)?;
                adam_step(b, &grads.b[idx], &mut adam[idx].1)?;
            }
        }
        trace.push(ExplainerEpoch {
            epoch,
            mean_loss: epoch_loss / epoch_users as f64,
        });
    }

    explainer.trained = true;
    Ok(ExplainerOutcome { explainer, trace })
}

/// Loss and flattened parameter gradient for one user over fixed
/// coalitions. Test hook for checking the backward pass against finite
/// differences; layer order is w0, b0, w1, b1, ...
#[doc(hidden)]
pub fn user_loss_and_flat_grads(
    explainer: &ShapleyExplainer,
    model: &DaeModel,
    r: &[f64],
    masks: &[Vec<bool>],
) -> Result<(f64, Vec<f64>)> {
    let features = explainer_features(model, r)?;
    let vf = InteractionValueFunction::new(model, r)?;
    let v0 = vf.empty_value();
    let gap = vf.full_value() - v0;
    let evaluated: Vec<(&[bool], f64)> = masks
        .iter()
        .map(|m| (m.as_slice(), vf.evaluate_mask(m)))
        .collect();
    let mut grads = LayerGrads::zeros(explainer);
    let loss = user_backward(explainer, &features, gap, v0, &evaluated, 1.0, &mut grads);
    Ok((loss, grads.flatten()))
}

impl ShapleyExplainer {
    /// Flattened parameters in layer order w0, b0, w1, b1, ... (test hook).
    #[doc(hidden)]
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    /// Overwrite parameters from a flat vector (test hook).
    #[doc(hidden)]
    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for (w, b) in &mut self.layers {
            let wl = w.data().len();
            w.data_mut().copy_from_slice(&flat[offset..offset + wl]);
            offset += wl;
            let bl = b.len();
            b.copy_from_slice(&flat[offset..offset + bl]);
            offset += bl;
        }
        assert_eq!(offset, flat.len());
    }
}

/// Normalized (pre-masking) values and the efficiency gap for one user.
pub fn normalized_values(
    explainer: &ShapleyExplainer,
    model: &DaeModel,
    r: &[f64],
) -> Result<(Vec<f64>, f64)> {
    assert!(explainer.is_trained(), "explainer must be trained");
    let vf = InteractionValueFunction::new(model, r)?;
    let gap = vf.gap();
    let features = explainer_features(model, r)?;
    Ok((normalize_efficient(&explainer.forward(&features), gap), gap))
}

/// Per-item Shapley estimates for one user, masked to observed entries:
/// forward pass, additive efficient normalization, then `φ ⊙ r`.
pub fn explain_user(
    explainer: &ShapleyExplainer,
    model: &DaeModel,
    r: &[f64],
) -> Result<Vec<f64>> {
    let (phi, _) = normalized_values(explainer, model, r)?;
    Ok(phi.iter().zip(r).map(|(&p, &rv)| p * rv).collect())
}

/// Explain every user with ≥ 1 interaction in the view; keys are
/// (user, item) pairs of observed interactions.
pub fn explain_all(
    explainer: &ShapleyExplainer,
    model: &DaeModel,
    view: &InteractionCorpus,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let mut scores = BTreeMap::new();
    for u in 0..view.n_users() {
        if view.degree(u) == 0 {
            continue;
        }
        let r = view.user_vector(u)?;
        let phi = explain_user(explainer, model, &r)?;
        for &v in view.row(u) {
            scores.insert((u, v), phi[v]);
        }
    }
    Ok(scores)
}

/// Exact per-item Shapley values for one user via the oracle.
///
/// Builds the coalition game over the user's observed items only
/// (non-observed items are provably null players) and scatters the exact
/// values back to item positions. Guarded to degree ≤ 20.
pub fn exact_interaction_values(model: &DaeModel, r: &[f64]) -> Result<Vec<f64>> {
    let vf = InteractionValueFunction::new(model, r)?;
    if vf.degree() > EXACT_PLAYER_GUARD {
        return Err(Error::TooManyPlayers {
            max: EXACT_PLAYER_GUARD,
            got: vf.degree(),
        });
    }
    let game = ObservedGame::new(&vf);
    let phi = exact_shapley(&game)?;
    let mut out = vec![0.0; r.len()];
    for (&item, &value) in vf.observed().iter().zip(&phi) {
        out[item] = value;
    }
    Ok(out)
}

/// Write the per-interaction value export: one row per observed
/// interaction with columns user_key, item_key, shapley_value (full
/// precision), rank-within-user (1 = highest value; ties by item index).
pub fn write_value_export(
    view: &InteractionCorpus,
    values: &BTreeMap<(usize, usize), f64>,
    path: &Path,
    meta: &[(String, String)],
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("# columns: user_key\titem_key\tshapley_value\trank_within_user\n");
    for u in 0..view.n_users() {
        let mut row: Vec<(usize, f64)> = view
            .row(u)
            .iter()
            .map(|&v| {
                let score = values.get(&(u, v)).copied().ok_or(Error::MissingScore {
                    user: u,
                    item: v,
                })?;
                Ok((v, score))
            })
            .collect::<Result<_>>()?;
        row.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores").then(a.0.cmp(&b.0)));
        for (rank, (item, score)) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                view.user_key(u),
                view.item_key(*item),
                score,
                rank + 1
            );
        }
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a value export back into a score map over the given view.
pub fn read_value_export(
    view: &InteractionCorpus,
    path: &Path,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", idx + 1),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        }
        let u = view
            .user_id(fields[0])
            .ok_or_else(|| bad(format!("unknown user `{}`", fields[0])))?;
        let v = view
            .item_id(fields[1])
            .ok_or_else(|| bad(format!("unknown item `{}`", fields[1])))?;
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad value `{}`", fields[2])))?;
        values.insert((u, v), score);
    }
    Ok(values)
}
