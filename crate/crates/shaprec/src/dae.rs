//! Denoising-autoencoder base recommender.
//!
//! One hidden layer: `r̂ = sigmoid(W2 · relu(W1 r̃ + b1) + b2)`, trained to
//! reconstruct each user's uncorrupted multi-hot vector from a randomly
//! masked copy under a confidence-weighted square loss. Observed entries
//! get loss weight ρ > 1, unobserved entries weight 1, so the model is
//! pushed to score interacted items near 1 without collapsing everything
//! else.
//!
//! Gradients are a hand-derived backward pass for this fixed architecture;
//! the test suites check it against central finite differences from
//! `numerics`.

use std::path::Path;

use crate::corpus::InteractionCorpus;
use crate::error::{Error, Result};
use crate::numerics::checkpoint::{read_checkpoint, write_checkpoint, Block, Checkpoint};
use crate::numerics::{
    adam_step, affine, relu, sigmoid, sigmoid_scalar, xavier_init, AdamState, DenseMatrix, Rng,
};

const DAE_STREAM: u64 = 0x444145;

/// Trained (or in-training) autoencoder parameters plus hyperparameters.
#[derive(Debug, Clone)]
pub struct DaeModel {
    /// H1 × N encoder weights.
    pub w1: DenseMatrix,
    /// H1 encoder bias.
    pub b1: Vec<f64>,
    /// N × H1 decoder weights.
    pub w2: DenseMatrix,
    /// N decoder bias.
    pub b2: Vec<f64>,
    /// Probability an observed input entry is zeroed during training.
    pub corruption_prob: f64,
    /// Confidence weight ρ > 1 on observed entries in the loss.
    pub rho: f64,
    /// L2 regularization coefficient λ on the weight matrices.
    pub lambda: f64,
}

impl DaeModel {
    /// Fresh Xavier-initialized model (biases start at zero).
    pub fn init(
        n_items: usize,
        hidden: usize,
        corruption_prob: f64,
        rho: f64,
        lambda: f64,
        rng: &mut Rng,
    ) -> Self {
        assert!(rho > 1.0, "confidence weight must exceed 1");
        assert!((0.0..1.0).contains(&corruption_prob));
        assert!(lambda >= 0.0);
        DaeModel {
            w1: xavier_init(hidden, n_items, rng),
            b1: vec![0.0; hidden],
            w2: xavier_init(n_items, hidden, rng),
            b2: vec![0.0; n_items],
            corruption_prob,
            rho,
            lambda,
        }
    }

    pub fn n_items(&self) -> usize {
        self.w2.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    /// Full forward pass; output entries are strictly inside (0, 1).
    pub fn forward(&self, r_tilde: &[f64]) -> Result<Vec<f64>> {
        let hidden = relu(&affine(&self.w1, r_tilde, &self.b1)?);
        Ok(sigmoid(&affine(&self.w2, &hidden, &self.b2)?))
    }

    /// Hidden activation from a sparse set of active input indices.
    ///
    /// Skipping zero input entries is arithmetically a no-op, so this is
    /// bit-identical to the dense encoder for a 0/1 input.
    pub fn encode_active(&self, active: &[usize]) -> Vec<f64> {
        let mut z = self.b1.clone();
        for &v in active {
            for (h, slot) in z.iter_mut().enumerate() {
                *slot += self.w1.get(h, v);
            }
        }
        relu(&z)
    }

    /// Decoder output at a single item position.
    pub fn decode_at(&self, hidden: &[f64], item: usize) -> f64 {
        let mut acc = 0.0;
        for (w, h) in self.w2.row(item).iter().zip(hidden) {
            acc += w * h;
        }
        sigmoid_scalar(acc + self.b2[item])
    }

    /// Forward pass with excluded observed entries zeroed: `forward(r ⊙ S)`.
    /// No corruption is applied; subset removal is exactly input masking.
    pub fn predict_subset(&self, r: &[f64], keep: &[bool]) -> Result<Vec<f64>> {
        if keep.len() != r.len() {
            return Err(Error::DimensionMismatch {
                op: "predict_subset",
                expected: r.len(),
                got: keep.len(),
            });
        }
        let masked: Vec<f64> = r
            .iter()
            .zip(keep)
            .map(|(&rv, &k)| if k { rv } else { 0.0 })
            .collect();
        self.forward(&masked)
    }

    /// Confidence-weighted square loss `Σ_v C_v (r_v − r̂_v)²` with
    /// `C_v = ρ` on observed entries and 1 elsewhere. The λ‖Θ‖² term is
    /// added once per batch by the trainer, not here.
    pub fn weighted_loss(&self, r: &[f64], r_hat: &[f64]) -> f64 {
        assert_eq!(r.len(), r_hat.len());
        let mut acc = 0.0;
        for (&rv, &pv) in r.iter().zip(r_hat) {
            let c = if rv == 1.0 { self.rho } else { 1.0 };
            let d = rv - pv;
            acc += c * d * d;
        }
        acc
    }

    /// Sum of squared weight-matrix entries (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.w1.frobenius_sq() + self.w2.frobenius_sq()
    }

    /// Write a checkpoint; `extra_header` lets callers embed provenance
    /// (seed, config hash). Blocks are stored in the fixed order
    /// w1, b1, w2, b2.
    pub fn save(&self, path: &Path, extra_header: &[(String, String)]) -> Result<()> {
        let mut header = vec![
            ("kind".to_string(), "dae".to_string()),
            ("n_items".to_string(), self.n_items().to_string()),
            ("hidden".to_string(), self.hidden().to_string()),
            ("activation1".to_string(), "relu".to_string()),
            ("activation2".to_string(), "sigmoid".to_string()),
            ("corruption_prob".to_string(), self.corruption_prob.to_string()),
            ("rho".to_string(), self.rho.to_string()),
            ("lambda".to_string(), self.lambda.to_string()),
        ];
        header.extend_from_slice(extra_header);
        let ckpt = Checkpoint {
            header,
            blocks: vec![
                Block::matrix("w1", &self.w1),
                Block::vector("b1", &self.b1),
                Block::matrix("w2", &self.w2),
                Block::vector("b2", &self.b2),
            ],
        };
        write_checkpoint(path, &ckpt)
    }

    pub fn load(path: &Path) -> Result<DaeModel> {
        let ckpt = read_checkpoint(path)?;
        let malformed = |message: &str| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        if ckpt.header_value("kind") != Some("dae") {
            return Err(malformed("not a dae checkpoint"));
        }
        let block = |name: &str| {
            ckpt.block(name)
                .cloned()
                .ok_or_else(|| malformed(&format!("missing block `{name}`")))
        };
        Ok(DaeModel {
            w1: block("w1")?.to_matrix(),
            b1: block("b1")?.data,
            w2: block("w2")?.to_matrix(),
            b2: block("b2")?.data,
            corruption_prob: ckpt.parsed_header(path, "corruption_prob")?,
            rho: ckpt.parsed_header(path, "rho")?,
            lambda: ckpt.parsed_header(path, "lambda")?,
        })
    }
}

/// Independently zero each observed (1) entry with probability
/// `corruption_prob`; zeros pass through untouched.
pub fn corrupt(r: &[f64], corruption_prob: f64, rng: &mut Rng) -> Vec<f64> {
    r.iter()
        .map(|&v| {
            if v == 1.0 && rng.bernoulli(corruption_prob) {
                0.0
            } else {
                v
            }
        })
        .collect()
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hidden: usize,
    pub corruption_prob: f64,
    pub rho: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 50,
            corruption_prob: 0.5,
            rho: 5.0,
            lambda: 0.001,
            learning_rate: 0.001,
            epochs: 200,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-user reconstruction loss (regularization excluded).
    pub mean_loss: f64,
    pub validation_score: Option<f64>,
}

/// Result of a training run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: DaeModel,
    pub trace: Vec<EpochStats>,
    /// Epoch whose parameters were kept, when a validation scorer ran.
    pub best_epoch: Option<usize>,
}

/// Gradient buffers mirroring the parameter blocks.
pub(crate) struct Grads {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
}

impl Grads {
    pub(crate) fn zeros(model: &DaeModel) -> Self {
        Grads {
            w1: DenseMatrix::zeros(model.hidden(), model.n_items()),
            b1: vec![0.0; model.hidden()],
            w2: DenseMatrix::zeros(model.n_items(), model.hidden()),
            b2: vec![0.0; model.n_items()],
        }
    }
}

/// Per-user loss and gradient accumulation (data term only).
///
/// `x` is the (possibly corrupted) input, `target` the uncorrupted vector.
/// Gradients are scaled by `scale` and added into `grads`.
pub(crate) fn accumulate_user(
    model: &DaeModel,
    x: &[f64],
    target: &[f64],
    scale: f64,
    grads: &mut Grads,
) -> Result<f64> {
    let z1 = affine(&model.w1, x, &model.b1)?;
    let h = relu(&z1);
    let z2 = affine(&model.w2, &h, &model.b2)?;
    let y = sigmoid(&z2);
    let loss = model.weighted_loss(target, &y);

    // delta on the decoder pre-activation
    let mut d2 = Vec::with_capacity(y.len());
    for v in 0..y.len() {
        let c = if target[v] == 1.0 { model.rho } else { 1.0 };
        d2.push(-2.0 * c * (target[v] - y[v]) * y[v] * (1.0 - y[v]));
    }
    grads.w2.add_outer(&d2, &h, scale);
    for (slot, &d) in grads.b2.iter_mut().zip(&d2) {
        *slot += scale * d;
    }
    let dh = model.w2.transpose_matvec(&d2);
    let d1: Vec<f64> = dh
        .iter()
        .zip(&z1)
        .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
        .collect();
    grads.w1.add_outer(&d1, x, scale);
    for (slot, &d) in grads.b1.iter_mut().zip(&d1) {
        *slot += scale * d;
    }
    Ok(loss)
}

/// Loss and flattened parameter gradient for one user, including the
/// regularization term. Test hook for checking the backward pass against
/// finite differences; parameter order is w1, b1, w2, b2.
#[doc(hidden)]
pub fn user_loss_and_flat_grads(model: &DaeModel, x: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut grads = Grads::zeros(model);
    let data_loss = accumulate_user(model, x, target, 1.0, &mut grads)?;
    let loss = data_loss + model.lambda * model.weight_norm_sq();
    let mut flat = grads.w1.data().to_vec();
    for (g, w) in flat.iter_mut().zip(model.w1.data()) {
        *g += 2.0 * model.lambda * w;
    }
    flat.extend_from_slice(&grads.b1);
    let mut gw2 = grads.w2.data().to_vec();
    for (g, w) in gw2.iter_mut().zip(model.w2.data()) {
        *g += 2.0 * model.lambda * w;
    }
    flat.extend(gw2);
    flat.extend_from_slice(&grads.b2);
    Ok((loss, flat))
}

/// Overwrite parameters from a flat vector in w1, b1, w2, b2 order
/// (test hook).
#[doc(hidden)]
pub fn set_params_flat(model: &mut DaeModel, flat: &[f64]) {
    let (h, n) = (model.hidden(), model.n_items());
    let mut offset = 0;
    model.w1.data_mut().copy_from_slice(&flat[offset..offset + h * n]);
    offset += h * n;
    model.b1.copy_from_slice(&flat[offset..offset + h]);
    offset += h;
    model.w2.data_mut().copy_from_slice(&flat[offset..offset + n * h]);
    offset += n * h;
    model.b2.copy_from_slice(&flat[offset..offset + n]);
    offset += n;
    assert_eq!(offset, flat.len());
}

/// Flattened parameters in w1, b1, w2, b2 order (test hook).
#[doc(hidden)]
pub fn params_flat(model: &DaeModel) -> Vec<f64> {
    let mut flat = model.w1.data().to_vec();
    flat.extend_from_slice(&model.b1);
    flat.extend_from_slice(model.w2.data());
    flat.extend_from_slice(&model.b2);
    flat
}

/// Mini-batch Adam over users: corrupt, forward, weighted loss against the
/// uncorrupted row, backpropagate, update. Users with no interactions in
/// the view are skipped. Deterministic given `config.seed`.
///
/// When a `validation` scorer is supplied the returned model is the
/// best-scoring epoch snapshot (earliest epoch wins ties); otherwise the
/// final epoch's.
pub fn train(
    view: &InteractionCorpus,
    config: &TrainConfig,
    init: Option<DaeModel>,
    validation: Option<&dyn Fn(&DaeModel) -> f64>,
) -> Result<TrainOutcome> {
    if view.total_interactions() == 0 {
        return Err(Error::EmptyCorpus);
    }
    assert!(config.epochs >= 1 && config.batch_size >= 1);
    let mut rng = Rng::new(config.seed).derive(DAE_STREAM);
    let mut model = match init {
        Some(m) => {
            assert_eq!(m.n_items(), view.n_items(), "init model dimension mismatch");
            m
        }
        None => DaeModel::init(
            view.n_items(),
            config.hidden,
            config.corruption_prob,
            config.rho,
            config.lambda,
            &mut rng,
        ),
    };

    let active_users: Vec<usize> = (0..view.n_users()).filter(|&u| view.degree(u) > 0).collect();
    let mut st_w1 = AdamState::new("w1", model.w1.data().len(), config.learning_rate);
    let mut st_b1 = AdamState::new("b1", model.b1.len(), config.learning_rate);
    let mut st_w2 = AdamState::new("w2", model.w2.data().len(), config.learning_rate);
    let mut st_b2 = AdamState::new("b2", model.b2.len(), config.learning_rate);

    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, DaeModel)> = None;
    let mut order = active_users.clone();

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = Grads::zeros(&model);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &u in batch {
                let target = view.user_vector(u)?;
                let x = corrupt(&target, model.corruption_prob, &mut rng);
                batch_loss += accumulate_user(&model, &x, &target, scale, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += batch_loss;
            // λ‖Θ‖² enters once per batch; biases are not regularized
            if model.lambda > 0.0 {
                for (g, w) in grads.w1.data_mut().iter_mut().zip(model.w1.data()) {
                    *g += 2.0 * model.lambda * w;
                }
                for (g, w) in grads.w2.data_mut().iter_mut().zip(model.w2.data()) {
                    *g += 2.0 * model.lambda * w;
                }
            }
            adam_step(model.w1.data_mut(), grads.w1.data(), &mut st_w1)?;
            adam_step(&mut model.b1, &grads.b1, &mut st_b1)?;
            adam_step(model.w2.data_mut(), grads.w2.data(), &mut st_w2)?;
            adam_step(&mut model.b2, &grads.b2, &mut st_b2)?;
        }
        let mean_loss = epoch_loss / active_users.len() as f64;
        let validation_score = validation.map(|score| score(&model));
        if let Some(score) = validation_score {
            let improved = match &best {
                Some((best_score, _, _)) => score > *best_score,
                None => true,
            };
            if improved {
                best = Some((score, epoch, model.clone()));
            }
        }
        trace.push(EpochStats {
            epoch,
            mean_loss,
            validation_score,
        });
    }

    let (model, best_epoch) = match best {
        Some((_, epoch, snapshot)) => (snapshot, Some(epoch)),
        None => (model, None),
    };
    Ok(TrainOutcome {
        model,
        trace,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::block_events_corpus;
    use crate::numerics::{central_difference, max_relative_error};

    fn toy_model() -> DaeModel {
        // 2 items, 1 hidden unit, hand-set weights
        DaeModel {
            w1: DenseMatrix::from_vec(1, 2, vec![0.5, -0.25]),
            b1: vec![0.1],
            w2: DenseMatrix::from_vec(2, 1, vec![2.0, -1.0]),
            b2: vec![0.05, -0.2],
            corruption_prob: 0.0,
            rho: 5.0,
            lambda: 0.0,
        }
    }

    #[test]
    fn corrupt_zero_prob_is_identity() {
        let mut rng = Rng::new(1);
        let r = vec![1.0, 0.0, 1.0, 1.0];
        assert_eq!(corrupt(&r, 0.0, &mut rng), r);
    }

    #[test]
    fn corrupt_zero_vector_unchanged() {
        let mut rng = Rng::new(1);
        assert_eq!(corrupt(&[0.0, 0.0], 0.9, &mut rng), vec![0.0, 0.0]);
    }

    #[test]
    fn corrupt_survival_is_binomial() {
        let mut rng = Rng::new(42);
        let r = vec![1.0; 4];
        let p = 0.3;
        let trials = 10_000;
        let mut survivors = 0usize;
        for _ in 0..trials {
            survivors += corrupt(&r, p, &mut rng).iter().filter(|&&v| v == 1.0).count();
        }
        let n = (trials * 4) as f64;
        let expected = n * (1.0 - p);
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!(
            (survivors as f64 - expected).abs() < 3.0 * sigma,
            "survivors {survivors} vs expected {expected}"
        );
    }

    #[test]
    fn forward_zero_params_gives_half() {
        let model = DaeModel {
            w1: DenseMatrix::zeros(3, 4),
            b1: vec![0.0; 3],
            w2: DenseMatrix::zeros(4, 3),
            b2: vec![0.0; 4],
            corruption_prob: 0.0,
            rho: 2.0,
            lambda: 0.0,
        };
        let out = model.forward(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.5; 4]);
    }

    #[test]
    fn forward_matches_hand_arithmetic() {
        let model = toy_model();
        // input (1,1): z1 = 0.5 - 0.25 + 0.1 = 0.35, h = 0.35
        // z2 = (2*0.35 + 0.05, -0.35 - 0.2) = (0.75, -0.55)
        let out = model.forward(&[1.0, 1.0]).unwrap();
        assert!((out[0] - 1.0 / (1.0 + (-0.75f64).exp())).abs() < 1e-15);
        assert!((out[1] - 1.0 / (1.0 + (0.55f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn forward_output_in_open_unit_interval() {
        let mut rng = Rng::new(8);
        let model = DaeModel::init(6, 3, 0.3, 5.0, 0.0, &mut rng);
        let out = model.forward(&[1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(out.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn weighted_loss_hand_case() {
        let model = toy_model(); // rho = 5
        let loss = model.weighted_loss(&[1.0, 0.0], &[0.5, 0.5]);
        assert!((loss - 1.5).abs() < 1e-12);
    }

    #[test]
    fn weighted_loss_zero_at_perfect_fit() {
        let model = toy_model();
        assert_eq!(model.weighted_loss(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn weighted_loss_rho_one_is_plain_sq_error() {
        let mut model = toy_model();
        model.rho = 1.0;
        let r = [1.0, 0.0];
        let p = [0.8, 0.3];
        let plain: f64 = r.iter().zip(&p).map(|(&a, &b)| (a - b) * (a - b)).sum();
        assert!((model.weighted_loss(&r, &p) - plain).abs() < 1e-15);
    }

    #[test]
    fn predict_subset_full_mask_is_forward() {
        let mut rng = Rng::new(3);
        let model = DaeModel::init(5, 3, 0.3, 5.0, 0.0, &mut rng);
        let r = [1.0, 0.0, 1.0, 1.0, 0.0];
        let full = model.predict_subset(&r, &[true; 5]).unwrap();
        assert_eq!(full, model.forward(&r).unwrap());
    }

    #[test]
    fn predict_subset_empty_mask_is_zero_input() {
        let mut rng = Rng::new(3);
        let model = DaeModel::init(5, 3, 0.3, 5.0, 0.0, &mut rng);
        let r = [1.0, 0.0, 1.0, 1.0, 0.0];
        let empty = model.predict_subset(&r, &[false; 5]).unwrap();
        assert_eq!(empty, model.forward(&[0.0; 5]).unwrap());
    }

    #[test]
    fn predict_subset_ignores_mask_on_zero_positions() {
        let mut rng = Rng::new(3);
        let model = DaeModel::init(5, 3, 0.3, 5.0, 0.0, &mut rng);
        let r = [1.0, 0.0, 1.0, 1.0, 0.0];
        let mut keep = [true; 5];
        let base = model.predict_subset(&r, &keep).unwrap();
        keep[1] = false;
        keep[4] = false;
        assert_eq!(model.predict_subset(&r, &keep).unwrap(), base);
    }

    #[test]
    fn encode_active_matches_dense_encoder() {
        let mut rng = Rng::new(5);
        let model = DaeModel::init(7, 4, 0.3, 5.0, 0.0, &mut rng);
        let active = [1usize, 4, 6];
        let mut dense = vec![0.0; 7];
        for &v in &active {
            dense[v] = 1.0;
        }
        let h_sparse = model.encode_active(&active);
        let h_dense = relu(&affine(&model.w1, &dense, &model.b1).unwrap());
        assert_eq!(h_sparse, h_dense);
        // decode_at agrees with the dense decoder per coordinate
        let full = model.forward(&dense).unwrap();
        for v in 0..7 {
            assert_eq!(model.decode_at(&h_sparse, v), full[v]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        // 4 items, 3 hidden: pack all parameters into one vector and compare
        let mut rng = Rng::new(21);
        let model = DaeModel::init(4, 3, 0.0, 5.0, 0.001, &mut rng);
        let target = [1.0, 0.0, 1.0, 0.0];
        let x = [1.0, 0.0, 0.0, 0.0]; // corrupted input

        let pack = |m: &DaeModel| -> Vec<f64> {
            let mut p = m.w1.data().to_vec();
            p.extend_from_slice(&m.b1);
            p.extend_from_slice(m.w2.data());
            p.extend_from_slice(&m.b2);
            p
        };
        let unpack = |p: &[f64]| -> DaeModel {
            let (n, h) = (4usize, 3usize);
            let mut m = model.clone();
            m.w1 = DenseMatrix::from_vec(h, n, p[..h * n].to_vec());
            m.b1 = p[h * n..h * n + h].to_vec();
            m.w2 = DenseMatrix::from_vec(n, h, p[h * n + h..h * n + h + n * h].to_vec());
            m.b2 = p[h * n + h + n * h..].to_vec();
            m
        };
        // full batch objective for one user: data loss + λ‖Θ‖²
        let objective = |p: &[f64]| -> f64 {
            let m = unpack(p);
            let y = m.forward(&x).unwrap();
            m.weighted_loss(&target, &y) + m.lambda * m.weight_norm_sq()
        };

        let point = pack(&model);
        let numeric = central_difference(objective, &point, 1e-6);

        let mut grads = Grads::zeros(&model);
        accumulate_user(&model, &x, &target, 1.0, &mut grads).unwrap();
        let mut analytic = grads.w1.data().to_vec();
        for (g, w) in analytic.iter_mut().zip(model.w1.data()) {
            *g += 2.0 * model.lambda * w;
        }
        analytic.extend_from_slice(&grads.b1);
        let mut gw2 = grads.w2.data().to_vec();
        for (g, w) in gw2.iter_mut().zip(model.w2.data()) {
            *g += 2.0 * model.lambda * w;
        }
        analytic.extend(gw2);
        analytic.extend_from_slice(&grads.b2);

        assert!(
            max_relative_error(&analytic, &numeric) < 1e-4,
            "rel err {}",
            max_relative_error(&analytic, &numeric)
        );
    }

    #[test]
    fn training_reduces_loss_on_block_corpus() {
        let corpus = block_events_corpus(20, 12, 2, 4, 0.1, 7);
        let config = TrainConfig {
            hidden: 8,
            epochs: 40,
            batch_size: 8,
            seed: 3,
            ..TrainConfig::default()
        };
        let outcome = train(&corpus, &config, None, None).unwrap();
        let first = outcome.trace.first().unwrap().mean_loss;
        let last = outcome.trace.last().unwrap().mean_loss;
        assert!(last < first, "loss did not descend: {first} -> {last}");
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = block_events_corpus(15, 10, 2, 4, 0.1, 9);
        let config = TrainConfig {
            hidden: 6,
            epochs: 10,
            batch_size: 4,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train(&corpus, &config, None, None).unwrap();
        let b = train(&corpus, &config, None, None).unwrap();
        for (sa, sb) in a.trace.iter().zip(&b.trace) {
            assert_eq!(sa.mean_loss.to_bits(), sb.mean_loss.to_bits());
        }
        assert_eq!(a.model.w1.data(), b.model.w1.data());
    }

    #[test]
    fn empty_view_is_an_error() {
        let corpus = block_events_corpus(5, 8, 2, 3, 0.1, 2);
        let empty = corpus.with_pairs(std::iter::empty());
        assert!(matches!(
            train(&empty, &TrainConfig::default(), None, None),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn checkpoint_round_trip_preserves_forward() {
        let mut rng = Rng::new(33);
        let model = DaeModel::init(6, 4, 0.4, 10.0, 0.001, &mut rng);
        let dir = std::env::temp_dir().join("shaprec-dae-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        model.save(&path, &[("seed".into(), "33".into())]).unwrap();
        let loaded = DaeModel::load(&path).unwrap();
        let r = [1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let a = model.forward(&r).unwrap();
        let b = loaded.forward(&r).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(loaded.rho, model.rho);
        assert_eq!(loaded.corruption_prob, model.corruption_prob);
    }
}
