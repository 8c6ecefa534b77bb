//! Randomized gradient checks of the full networks and the triple scorer.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{classifier_grad_check, Classifier, ModelKind, Sample, TrainedModel};
use crate::models::{EMBEDDING_DIM, IMAGE_DIM, NUM_CLASSES};
use crate::nn::{Coordinates, GradCheckReport};
use crate::ntl::{NtlRelationParams, DEFAULT_SLICES, INIT_RANGE};
use crate::rng::{self, Purpose, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Baseline,
    Fusion,
    Ntl,
}

impl Network {
    pub const ALL: [Network; 3] = [Network::Baseline, Network::Fusion, Network::Ntl];

    /// Coordinates probed per parameter tensor per draw. The fusion network
    /// costs two full forward passes per coordinate, so it gets the fewest.
    pub fn default_per_tensor(self) -> usize {
        match self {
            Network::Baseline => 16,
            Network::Fusion => 3,
            Network::Ntl => 32,
        }
    }
}

impl std::str::FromStr for Network {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Network::Baseline),
            "fusion" => Ok(Network::Fusion),
            "ntl" => Ok(Network::Ntl),
            other => Err(Error::invalid(format!("unknown network `{other}`"))),
        }
    }
}

impl std::fmt::Display for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Network::Baseline => "baseline",
            Network::Fusion => "fusion",
            Network::Ntl => "ntl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawPlan {
    pub draws: usize,
    pub step: f64,
    pub per_tensor: usize,
    pub seed: u64,
}

/// `plan.draws` independent draws of parameters and input, each checked on
/// `plan.per_tensor` seeded coordinates of every parameter tensor. Classifier
/// draws use a fresh Glorot initialization with biases drawn from ±0.1 so
/// that bias gradients are exercised away from zero; the scorer uses d = 100,
/// k = 4 with entries in ±0.1 and unit-range entity vectors.
pub fn check_network(network: Network, plan: &DrawPlan) -> Result<GradCheckReport> {
    if plan.draws == 0 || plan.per_tensor == 0 {
        return Err(Error::invalid("grad check needs at least one draw and one coordinate"));
    }
    let mut total = GradCheckReport::default();
    for draw in 0..plan.draws as u64 {
        let draw_seed = rng::derive_seed(plan.seed, Purpose::GradCheck, draw);
        let mut rng = rng::stream(draw_seed, Purpose::GradCheck, 0);
        let coords = Coordinates::Sample {
            per_tensor: plan.per_tensor,
            seed: draw_seed,
        };
        let report = match network {
            Network::Baseline | Network::Fusion => {
                let kind = if network == Network::Baseline {
                    ModelKind::Baseline
                } else {
                    ModelKind::Fusion
                };
                let mut model = TrainedModel::build(kind, draw_seed)?;
                for t in model.params_mut() {
                    if t.shape().len() == 1 {
                        t.data_mut().iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
                    }
                }
                let sample = random_sample(&mut rng);
                classifier_grad_check(&mut model, &sample, plan.step, coords)?
            }
            Network::Ntl => {
                let d = EMBEDDING_DIM;
                let params = NtlRelationParams::random(d, DEFAULT_SLICES, INIT_RANGE, &mut rng);
                let h: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let t: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                params.grad_check(&h, &t, plan.step, coords)?
            }
        };
        total = total.merge(report);
    }
    Ok(total)
}

fn random_sample(rng: &mut StreamRng) -> Sample {
    Sample {
        image: (0..IMAGE_DIM).map(|_| rng.random_range(0.0..1.0)).collect(),
        embedding: (0..EMBEDDING_DIM).map(|_| rng.random_range(-1.0..1.0)).collect(),
        label: rng.random_range(0..NUM_CLASSES),
    }
}
