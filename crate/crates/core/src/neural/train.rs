//! End-to-end training loop: seeded initialization, shuffled mini-batches,
//! mean-gradient momentum updates, and early stopping on validation loss.

use super::loss::binary_cross_entropy;
use super::model::EpuModel;
use super::optim::{apply_model_step, SgdConfig};
use super::subnet::ArchConfig;
use super::NeuralError;
use crate::pfm::{PfmConfig, PfmSet};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 64,
            max_epochs: 50,
            patience: 10,
            seed: 42,
        }
    }
}

/// Per-epoch losses and accuracies. Training figures are running means over
/// the epoch's batches (evaluated before each update); validation figures
/// come from a full pass with frozen weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

fn check_samples(
    name: &str,
    samples: &[(PfmSet, u8)],
    config: PfmConfig,
    input: (usize, usize),
) -> Result<(), NeuralError> {
    for (pfms, y) in samples {
        if *y > 1 {
            return Err(NeuralError::InvalidLabel(*y));
        }
        if pfms.config != config {
            return Err(NeuralError::ConfigMismatch { expected: config, got: pfms.config });
        }
        if (pfms.h(), pfms.w()) != input {
            return Err(NeuralError::InputShape {
                want_h: input.0,
                want_w: input.1,
                got_h: pfms.h(),
                got_w: pfms.w(),
            });
        }
    }
    if samples.is_empty() {
        return Err(NeuralError::DegenerateData(format!("{name} split is empty")));
    }
    Ok(())
}

fn evaluate(model: &EpuModel<f32>, samples: &[(PfmSet, u8)]) -> Result<(f64, f64), NeuralError> {
    let mut loss = 0.0f64;
    let mut correct = 0usize;
    for (pfms, y) in samples {
        let pred = super::model::epu_forward(model, pfms)?;
        loss += binary_cross_entropy(*y, pred.probability)?;
        if (pred.probability >= 0.5) == (*y == 1) {
            correct += 1;
        }
    }
    Ok((loss / samples.len() as f64, correct as f64 / samples.len() as f64))
}

/// Trains an additive model from scratch. Returns the parameters of the
/// best validation-loss epoch together with the full epoch history.
///
/// Deterministic for a fixed config: one seeded generator drives
/// initialization and every shuffle, batches are visited in shuffle order,
/// and per-sample gradients are summed in batch order.
///
/// `max_epochs == 0` returns the freshly initialized model and an empty
/// history.
pub fn train_epu(
    pfm_config: PfmConfig,
    input_size: (usize, usize),
    arch: &ArchConfig,
    train: &[(PfmSet, u8)],
    val: &[(PfmSet, u8)],
    cfg: &TrainConfig,
) -> Result<(EpuModel<f32>, Vec<EpochStats>), NeuralError> {
    if cfg.batch_size == 0 {
        return Err(NeuralError::InvalidConfig("batch size must be positive".into()));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(NeuralError::InvalidConfig("learning rate must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.momentum) {
        return Err(NeuralError::InvalidConfig("momentum must lie in [0,1)".into()));
    }
    check_samples("training", train, pfm_config, input_size)?;
    check_samples("validation", val, pfm_config, input_size)?;
    let positives = train.iter().filter(|(_, y)| *y == 1).count();
    if positives == 0 || positives == train.len() {
        return Err(NeuralError::DegenerateData(
            "training split contains a single class".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = EpuModel::<f32>::init(pfm_config, input_size, arch, &mut rng)?;
    if cfg.max_epochs == 0 {
        return Ok((model, Vec::new()));
    }
    let mut velocity = model.zero_grads();
    let sgd = SgdConfig { learning_rate: cfg.learning_rate, momentum: cfg.momentum };

    let mut history = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_model = model.clone();
    let mut stale_epochs = 0usize;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.zero_grads();
            for &i in batch {
                let (pfms, y) = &train[i];
                let (g, pred) = model.backprop(pfms, *y)?;
                loss_sum += binary_cross_entropy(*y, pred.probability)?;
                if (pred.probability >= 0.5) == (*y == 1) {
                    correct += 1;
                }
                for (acc, part) in grads.subnets.iter_mut().zip(&g.subnets) {
                    for (a, p) in acc.param_slices_mut().into_iter().zip(part.param_slices()) {
                        for (av, pv) in a.iter_mut().zip(p) {
                            *av += *pv;
                        }
                    }
                }
                grads.bias += g.bias;
            }
            // Mean gradient over the batch.
            let scale = 1.0 / batch.len() as f32;
            for net in &mut grads.subnets {
                for s in net.param_slices_mut() {
                    for v in s {
                        *v *= scale;
                    }
                }
            }
            grads.bias *= scale;
            apply_model_step(&mut model, &grads, &mut velocity, sgd);
        }
        let (val_loss, val_accuracy) = evaluate(&model, val)?;
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            val_loss,
            val_accuracy,
        });
        if val_loss < best_loss {
            best_loss = val_loss;
            best_model = model.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                break;
            }
        }
    }
    Ok((best_model, history))
}
