//! The two relation classifiers and their training harness.
//!
//! * [`BaselineModel`]: the averaged entity embedding through three relu dense
//!   layers with dropout and a 12-way softmax.
//! * [`FusionModel`]: five conv/pool blocks compress the 4096-d image feature
//!   to 8 × 128, which is flattened, concatenated with the entity embedding
//!   and classified by a relu dense layer and a 12-way softmax.

mod arch;
mod cv;
pub mod synthetic;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::loss::{argmax, class_cross_entropy, class_cross_entropy_grad};
use crate::nn::{DropoutStream, Mode, Tensor, Trace};

pub use arch::{classifier_grad_check, BaselineModel, FusionModel};
pub use cv::{fold_assignments, kfold_cv, CvReport};
pub use train::{evaluate, train, EpochMetrics, TrainConfig, TrainReport};

pub const NUM_CLASSES: usize = 12;
pub const EMBEDDING_DIM: usize = 100;
pub const IMAGE_DIM: usize = 4096;
pub const CONV_FILTERS: usize = 8;
pub const CONV_BLOCKS: usize = 5;

/// One classifier input: the image feature (ignored by the baseline), the
/// averaged entity embedding, and the class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Vec<f64>,
    pub embedding: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Baseline,
    Fusion,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ModelKind::Baseline),
            "fusion" => Ok(ModelKind::Fusion),
            other => Err(Error::invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Fusion => "fusion",
        })
    }
}

/// Output of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Pass {
    pub probs: Vec<f64>,
    traces: Vec<Trace>,
}

impl Pass {
    /// Identifies the relu/pool branch taken by the pass.
    pub fn fingerprint(&self) -> u64 {
        self.traces
            .iter()
            .fold(0u64, |acc, t| acc.rotate_left(17) ^ t.fingerprint)
    }
}

pub trait Classifier: Send + Sync {
    fn kind(&self) -> ModelKind;
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
    fn check_sample(&self, sample: &Sample) -> Result<()>;
    fn forward(&self, sample: &Sample, mode: Mode, dropout: &mut DropoutStream) -> Result<Pass>;
    /// Adds the gradient of the cross-entropy of `pass` against `label`.
    fn backward(&self, pass: &Pass, label: usize, grads: &mut [Tensor]) -> Result<()>;

    fn num_classes(&self) -> usize {
        NUM_CLASSES
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    fn zero_grads(&self) -> Vec<Tensor> {
        self.params().iter().map(|t| Tensor::zeros(t.shape())).collect()
    }

    /// Eval-mode class distribution.
    fn probabilities(&self, sample: &Sample) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        Ok(self.forward(sample, Mode::Eval, &mut DropoutStream::new(0))?.probs)
    }

    /// Argmax class (lowest index on ties) and the distribution.
    fn predict(&self, sample: &Sample) -> Result<(usize, Vec<f64>)> {
        let probs = self.probabilities(sample)?;
        Ok((argmax(&probs), probs))
    }

    /// Cross-entropy of one sample, accumulating its gradient into `grads`.
    /// Returns the loss and the predicted class.
    fn accumulate(
        &self,
        sample: &Sample,
        mode: Mode,
        dropout: &mut DropoutStream,
        grads: &mut [Tensor],
    ) -> Result<(f64, usize)> {
        self.check_sample(sample)?;
        let pass = self.forward(sample, mode, dropout)?;
        self.backward(&pass, sample.label, grads)?;
        Ok((class_cross_entropy(sample.label, &pass.probs), argmax(&pass.probs)))
    }
}

fn loss_grad(pass: &Pass, label: usize) -> Result<Tensor> {
    if label >= pass.probs.len() {
        return Err(Error::invalid(format!("class index {label} out of range")));
    }
    Ok(Tensor::vector(class_cross_entropy_grad(label, &pass.probs)))
}

/// A classifier of either architecture, as loaded from a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Baseline(BaselineModel),
    Fusion(FusionModel),
}

impl TrainedModel {
    pub fn build(kind: ModelKind, seed: u64) -> Result<Self> {
        Ok(match kind {
            ModelKind::Baseline => TrainedModel::Baseline(BaselineModel::new(seed)?),
            ModelKind::Fusion => TrainedModel::Fusion(FusionModel::new(seed)?),
        })
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            TrainedModel::Baseline(m) => m,
            TrainedModel::Fusion(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Classifier {
        match self {
            TrainedModel::Baseline(m) => m,
            TrainedModel::Fusion(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }

    fn params(&self) -> Vec<&Tensor> {
        self.inner().params()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.inner_mut().params_mut()
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        self.inner().check_sample(sample)
    }

    fn forward(&self, sample: &Sample, mode: Mode, dropout: &mut DropoutStream) -> Result<Pass> {
        self.inner().forward(sample, mode, dropout)
    }

    fn backward(&self, pass: &Pass, label: usize, grads: &mut [Tensor]) -> Result<()> {
        self.inner().backward(pass, label, grads)
    }
}
