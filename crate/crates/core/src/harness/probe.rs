//! Downstream value check: train a small classifier once on the curated
//! selection and once on the random control, then compare them on a held-out
//! test split.

use super::stats::auc;
use super::toy::ToyItem;
use super::HarnessError;
use crate::neural::{
    logistic, sgd_momentum_step, ArchConfig, HeadActivation, SgdConfig, Subnet, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Test-set metrics for one repeat of the paired comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOutcome {
    pub repeat: usize,
    pub curated_accuracy: f64,
    pub control_accuracy: f64,
    pub curated_auc: f64,
    pub control_auc: f64,
}

fn flat_input(item: &ToyItem) -> Vec<f32> {
    let mut buf = Vec::new();
    for plane in item.image.planes() {
        buf.extend_from_slice(plane.data());
    }
    buf
}

fn class_counts(items: &[&ToyItem]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for item in items {
        *counts.entry(item.class.clone()).or_insert(0) += 1;
    }
    counts
}

fn resolve<'a>(
    ids: &[String],
    pool: &'a BTreeMap<&str, &'a ToyItem>,
    arm: &str,
) -> Result<Vec<&'a ToyItem>, HarnessError> {
    ids.iter()
        .map(|id| {
            pool.get(id.as_str()).copied().ok_or_else(|| {
                HarnessError::Protocol(format!("{arm} id {id:?} is not in the pool"))
            })
        })
        .collect()
}

/// One training arm: fixed-epoch logistic classifier on raw image channels,
/// evaluated on the test split. The architecture is the same convolutional
/// stack the scoring model uses per map, with a linear head squashed through
/// the logistic.
fn run_arm(
    train: &[&ToyItem],
    test: &[&ToyItem],
    arch: &ArchConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(f64, f64), HarnessError> {
    let (h, w) = {
        let p = &train[0].image.planes()[0];
        (p.h(), p.w())
    };
    let channels = train[0].image.planes().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net: Subnet<f32> = Subnet::init(arch, channels, HeadActivation::Linear, &mut rng);
    let mut velocity = net.zeros_like();
    let sgd = SgdConfig { learning_rate: cfg.learning_rate, momentum: cfg.momentum };

    let inputs: Vec<Vec<f32>> = train.iter().map(|item| flat_input(item)).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = net.zeros_like();
            for &i in batch {
                let (z, trace) = net.forward(&inputs[i], h, w)?;
                let p = logistic(f64::from(z));
                let dz = (p - f64::from(train[i].label)) as f32;
                let g = net.backward(&trace, dz);
                for (acc, part) in grads.param_slices_mut().into_iter().zip(g.param_slices()) {
                    for (a, &b) in acc.iter_mut().zip(part) {
                        *a += b;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f32;
            for slice in grads.param_slices_mut() {
                for v in slice {
                    *v *= scale;
                }
            }
            for ((p, g), v) in net
                .param_slices_mut()
                .into_iter()
                .zip(grads.param_slices())
                .zip(velocity.param_slices_mut())
            {
                sgd_momentum_step(p, g, v, sgd);
            }
        }
    }

    let mut correct = 0usize;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for item in test {
        let (z, _) = net.forward(&flat_input(item), h, w)?;
        let p = logistic(f64::from(z));
        let predicted = u8::from(p >= 0.5);
        if predicted == item.label {
            correct += 1;
        }
        if item.label == 1 {
            positive.push(p);
        } else {
            negative.push(p);
        }
    }
    let accuracy = correct as f64 / test.len() as f64;
    let auc = auc(&positive, &negative)
        .ok_or_else(|| HarnessError::Protocol("test split must contain both classes".into()))?;
    Ok((accuracy, auc))
}

/// Trains the probe on the curated ids and on the control ids with shared
/// seeds, repeating `repeats` times. The arms must have the same size and
/// class distribution so any metric gap comes from which images were picked,
/// not how many or of what class.
pub fn downstream_probe(
    curated_ids: &[String],
    control_ids: &[String],
    pool: &[ToyItem],
    test: &[ToyItem],
    arch: &ArchConfig,
    cfg: &TrainConfig,
    repeats: usize,
) -> Result<Vec<ProbeOutcome>, HarnessError> {
    if curated_ids.is_empty() {
        return Err(HarnessError::EmptySet("curated ids".into()));
    }
    if test.is_empty() {
        return Err(HarnessError::EmptySet("test split".into()));
    }
    if curated_ids.len() != control_ids.len() {
        return Err(HarnessError::Protocol(format!(
            "curated arm has {} images but the control arm has {}",
            curated_ids.len(),
            control_ids.len()
        )));
    }
    let by_id: BTreeMap<&str, &ToyItem> =
        pool.iter().map(|item| (item.id.as_str(), item)).collect();
    if by_id.len() != pool.len() {
        return Err(HarnessError::Protocol("pool ids are not unique".into()));
    }

    // Sorting makes each arm a function of the id set, not of its ordering.
    let mut curated = resolve(curated_ids, &by_id, "curated")?;
    let mut control = resolve(control_ids, &by_id, "control")?;
    curated.sort_by_key(|item| item.id.as_str());
    control.sort_by_key(|item| item.id.as_str());

    let curated_classes = class_counts(&curated);
    let control_classes = class_counts(&control);
    if curated_classes != control_classes {
        return Err(HarnessError::Protocol(format!(
            "class mix differs between arms: curated {curated_classes:?}, control {control_classes:?}"
        )));
    }

    let test_refs: Vec<&ToyItem> = test.iter().collect();
    let mut outcomes = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let seed = cfg.seed.wrapping_add(repeat as u64);
        let (curated_accuracy, curated_auc) = run_arm(&curated, &test_refs, arch, cfg, seed)?;
        let (control_accuracy, control_auc) = run_arm(&control, &test_refs, arch, cfg, seed)?;
        outcomes.push(ProbeOutcome {
            repeat,
            curated_accuracy,
            control_accuracy,
            curated_auc,
            control_auc,
        });
    }
    Ok(outcomes)
}
