use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Classifier, ModelKind, Sample};
use crate::error::{Error, Result};
use crate::nn::loss::{argmax, class_cross_entropy};
use crate::nn::{Adam, DropoutStream, Mode};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub val_split: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: crate::nn::adam::DEFAULT_LR,
            val_split: 0.2,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelKind,
    pub config: TrainConfig,
    pub train_size: usize,
    pub val_size: usize,
    pub epochs: Vec<EpochMetrics>,
    pub final_val_accuracy: Option<f64>,
}

impl TrainReport {
    /// `epoch,train_loss,train_acc,val_loss,val_acc`; missing validation
    /// metrics are left empty.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.train_accuracy,
                opt(e.val_loss),
                opt(e.val_accuracy)
            ));
        }
        out
    }
}

/// Seeded shuffle, then the last `round(n * val_split)` samples validate.
pub(crate) fn split_indices(n: usize, val_split: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Purpose::Split, 0));
    let n_val = (n as f64 * val_split).round() as usize;
    let val = order.split_off(n - n_val);
    (order, val)
}

/// Trains with Adam and categorical cross-entropy over shuffled minibatches.
pub fn train<M: Classifier + ?Sized>(model: &mut M, samples: &[Sample], config: &TrainConfig) -> Result<TrainReport> {
    if samples.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if !(0.0..1.0).contains(&config.val_split) {
        return Err(Error::invalid(format!(
            "validation split {} outside [0, 1)",
            config.val_split
        )));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    for s in samples {
        model.check_sample(s)?;
    }
    let (train_idx, val_idx) = split_indices(samples.len(), config.val_split, config.seed);
    if train_idx.is_empty() {
        return Err(Error::invalid("validation split leaves no training samples"));
    }
    let val: Vec<&Sample> = val_idx.iter().map(|&i| &samples[i]).collect();

    let mut adam = Adam::new(config.lr, model.params());
    let mut dropout = DropoutStream::new(rng::derive_seed(config.seed, Purpose::Dropout, 0));
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut order = train_idx.clone();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng::stream(config.seed, Purpose::Epoch, epoch as u64));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.zero_grads();
            for &i in batch {
                let s = &samples[i];
                let (loss, pred) = model.accumulate(s, Mode::Train, &mut dropout, &mut grads)?;
                loss_sum += loss;
                correct += usize::from(pred == s.label);
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(scale));
            adam.step(&mut model.params_mut(), &grads)?;
        }
        let n = order.len() as f64;
        let (val_loss, val_accuracy) = if val.is_empty() {
            (None, None)
        } else {
            let (l, a) = loss_and_accuracy(model, &val)?;
            (Some(l), Some(a))
        };
        log::debug!(
            "epoch {}: loss {:.4} acc {:.4} val_acc {:?}",
            epoch + 1,
            loss_sum / n,
            correct as f64 / n,
            val_accuracy
        );
        epochs.push(EpochMetrics {
            epoch: epoch + 1,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            val_loss,
            val_accuracy,
        });
    }

    Ok(TrainReport {
        model: model.kind(),
        config: *config,
        train_size: train_idx.len(),
        val_size: val.len(),
        final_val_accuracy: epochs.last().and_then(|e| e.val_accuracy),
        epochs,
    })
}

fn loss_and_accuracy<M: Classifier + ?Sized>(model: &M, samples: &[&Sample]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let probs = model.probabilities(s)?;
        loss += class_cross_entropy(s.label, &probs);
        correct += usize::from(argmax(&probs) == s.label);
    }
    let n = samples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Fraction of samples whose predicted class equals the label.
pub fn evaluate<M: Classifier + ?Sized>(model: &M, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let refs: Vec<&Sample> = samples.iter().collect();
    Ok(loss_and_accuracy(model, &refs)?.1)
}
