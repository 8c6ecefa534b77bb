use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NtlModel, NtlRelationParams, DEFAULT_SLICES, INIT_RANGE};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::nn::{Adam, Tensor};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtlConfig {
    pub k: usize,
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub seed: u64,
}

impl Default for NtlConfig {
    fn default() -> Self {
        NtlConfig {
            k: DEFAULT_SLICES,
            margin: 1.0,
            lr: crate::nn::adam::DEFAULT_LR,
            epochs: 200,
            negatives_per_positive: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtlTrainReport {
    pub config: NtlConfig,
    /// Mean hinge loss over all (positive, negative) pairs of each epoch,
    /// evaluated before the update for that positive.
    pub epoch_losses: Vec<f64>,
}

/// Margin-ranking training with filtered tail corruption.
///
/// Each epoch visits the triples in a seeded order. For every positive
/// `(h, r, t)` it draws `negatives_per_positive` tails uniformly from the
/// entities `t'` with `(h, r, t')` absent from the KB, accumulates the gradient
/// of `max(0, margin - s(h,r,t) + s(h,r,t'))` with `s` the plausibility, and
/// takes one Adam step on relation `r`. Entity vectors stay frozen.
pub fn train_ntl(
    kb: &KnowledgeBase,
    entity_vectors: &IndexMap<String, Vec<f64>>,
    config: &NtlConfig,
) -> Result<(NtlModel, NtlTrainReport)> {
    if kb.is_empty() {
        return Err(Error::Empty("knowledge base"));
    }
    if kb.num_entities() < 2 {
        return Err(Error::invalid("link prediction needs at least two entities"));
    }
    if config.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if config.negatives_per_positive == 0 {
        return Err(Error::invalid("negatives_per_positive must be at least 1"));
    }
    let mut entities = IndexMap::new();
    for e in kb.entities() {
        let v = entity_vectors.get(e).ok_or_else(|| Error::UnknownLabel {
            kind: "entity vector for",
            label: e.to_string(),
        })?;
        entities.insert(e.to_string(), v.clone());
    }
    let d = entities[0].len();
    if d == 0 {
        return Err(Error::shape("entity vectors are empty"));
    }

    let relations: IndexMap<String, NtlRelationParams> = kb
        .relations()
        .enumerate()
        .map(|(ri, r)| {
            let mut rng = rng::stream(config.seed, Purpose::Init, ri as u64);
            (
                r.to_string(),
                NtlRelationParams::random(d, config.k, INIT_RANGE, &mut rng),
            )
        })
        .collect();
    let mut model = NtlModel::new(relations, entities, d, config.k)?;

    let triples: Vec<_> = kb.triples().cloned().collect();
    // Indices of (head, relation, tail) plus the filtered candidate tails.
    let mut plan = Vec::with_capacity(triples.len());
    for t in &triples {
        let ri = kb.relation_index(&t.relation).expect("relation from kb");
        let hi = kb.entity_index(&t.head).expect("entity from kb");
        let ti = kb.entity_index(&t.tail).expect("entity from kb");
        let candidates: Vec<usize> = kb
            .entities()
            .enumerate()
            .filter(|(_, e)| !kb.contains_labels(&t.head, &t.relation, e))
            .map(|(i, _)| i)
            .collect();
        plan.push((hi, ri, ti, candidates));
    }

    let mut optimizers: Vec<Adam> = model
        .relations()
        .values()
        .map(|p| Adam::new(config.lr, p.tensors()))
        .collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let vectors: Vec<Vec<f64>> = model.entities().values().cloned().collect();

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..plan.len()).collect();
        order.shuffle(&mut rng::stream(config.seed, Purpose::Epoch, epoch as u64));
        let mut neg_rng = rng::stream(config.seed, Purpose::Negatives, epoch as u64);
        let mut total = 0.0;
        let mut pairs = 0usize;
        for &pi in &order {
            let (hi, ri, ti, ref candidates) = plan[pi];
            if candidates.is_empty() {
                continue;
            }
            let params = &model.relations()[ri];
            let (h, t) = (&vectors[hi], &vectors[ti]);
            let raw_true = params.score(h, t)?;
            let mut grads: Option<[Tensor; 3]> = None;
            for _ in 0..config.negatives_per_positive {
                let ni = candidates[neg_rng.random_range(0..candidates.len())];
                let raw_neg = params.score(h, &vectors[ni])?;
                // plausibility = -raw
                let loss = (config.margin + raw_true - raw_neg).max(0.0);
                total += loss;
                pairs += 1;
                if loss > 0.0 {
                    let gt = params.gradients(h, t)?;
                    let gn = params.gradients(h, &vectors[ni])?;
                    let acc = grads.get_or_insert_with(|| {
                        let (d, k) = (model.dim(), model.slices());
                        [
                            Tensor::zeros(&[k, d, d]),
                            Tensor::zeros(&[k, 2 * d]),
                            Tensor::zeros(&[k]),
                        ]
                    });
                    for (a, (p, n)) in acc.iter_mut().zip([(gt.w, gn.w), (gt.v, gn.v), (gt.b, gn.b)]) {
                        for ((x, pv), nv) in a.data_mut().iter_mut().zip(p.data()).zip(n.data()) {
                            *x += pv - nv;
                        }
                    }
                }
            }
            if let Some(mut g) = grads {
                let scale = 1.0 / config.negatives_per_positive as f64;
                g.iter_mut().for_each(|t| t.scale(scale));
                let params = &mut model.relations_mut()[ri];
                let mut tensors = params.tensors_mut();
                optimizers[ri].step(&mut tensors, &g)?;
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { total / pairs as f64 });
    }

    Ok((
        model,
        NtlTrainReport {
            config: *config,
            epoch_losses,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Triple;

    fn toy() -> (KnowledgeBase, IndexMap<String, Vec<f64>>) {
        let kb: KnowledgeBase = [("a", "r", "b"), ("b", "r", "c"), ("c", "s", "a")]
            .iter()
            .map(|(h, r, t)| Triple::new(*h, *r, *t))
            .collect();
        let vecs = [("a", [1.0, 0.0]), ("b", [0.0, 1.0]), ("c", [-1.0, 0.5])]
            .iter()
            .map(|(l, v)| (l.to_string(), v.to_vec()))
            .collect();
        (kb, vecs)
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let (kb, vecs) = toy();
        let cfg = NtlConfig {
            epochs: 0,
            seed: 11,
            ..NtlConfig::default()
        };
        let (m, report) = train_ntl(&kb, &vecs, &cfg).unwrap();
        assert!(report.epoch_losses.is_empty());
        let mut rng = rng::stream(11, Purpose::Init, 0);
        let expected = NtlRelationParams::random(2, cfg.k, INIT_RANGE, &mut rng);
        assert_eq!(m.relations()["r"], expected);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (kb, vecs) = toy();
        let cfg = NtlConfig {
            epochs: 20,
            seed: 3,
            ..NtlConfig::default()
        };
        let a = train_ntl(&kb, &vecs, &cfg).unwrap();
        let b = train_ntl(&kb, &vecs, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_ntl(&kb, &vecs, &NtlConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn input_errors() {
        let (kb, mut vecs) = toy();
        assert!(matches!(
            train_ntl(&KnowledgeBase::new(), &vecs, &NtlConfig::default()),
            Err(Error::Empty(_))
        ));
        vecs.shift_remove("c");
        assert!(matches!(
            train_ntl(&kb, &vecs, &NtlConfig::default()),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn loss_decreases() {
        let (kb, vecs) = toy();
        let cfg = NtlConfig {
            epochs: 100,
            seed: 1,
            ..NtlConfig::default()
        };
        let (m, r) = train_ntl(&kb, &vecs, &cfg).unwrap();
        assert!(r.epoch_losses.last().unwrap() <= &r.epoch_losses[0]);
        assert_eq!(m.hits_at_n(kb.triples(), 1).unwrap(), 1.0);
    }
}
