use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::train::{evaluate, train, TrainConfig};
use super::{Classifier, Sample};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub fold_sizes: Vec<usize>,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the fold accuracies.
    pub std: f64,
}

/// Seeded shuffle cut into `k` contiguous folds; the first `n % k` folds get
/// one extra sample.
pub fn fold_assignments(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("k-fold needs k >= 2"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds dataset size {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Purpose::Folds, 0));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// k-fold cross-validation. Each fold gets a fresh model from `build` with a
/// seed derived from `(seed, fold)`, trains on the other folds with
/// `config` (its validation split is ignored) and is scored on its own fold.
/// Folds run on separate threads; results are merged by fold index.
pub fn kfold_cv<M, F>(build: F, samples: &[Sample], k: usize, seed: u64, config: &TrainConfig) -> Result<CvReport>
where
    M: Classifier,
    F: Fn(u64) -> Result<M> + Sync,
{
    let folds = fold_assignments(samples.len(), k, seed)?;
    let run_fold = |fi: usize| -> Result<f64> {
        let fold_seed = rng::derive_seed(seed, Purpose::Fold, fi as u64);
        let mut in_fold = vec![false; samples.len()];
        folds[fi].iter().for_each(|&i| in_fold[i] = true);
        let train_set: Vec<Sample> = samples
            .iter()
            .zip(&in_fold)
            .filter(|(_, held)| !**held)
            .map(|(s, _)| s.clone())
            .collect();
        let val_set: Vec<Sample> = folds[fi].iter().map(|&i| samples[i].clone()).collect();
        let mut model = build(fold_seed)?;
        let fold_config = TrainConfig {
            val_split: 0.0,
            seed: fold_seed,
            ..*config
        };
        train(&mut model, &train_set, &fold_config)?;
        let acc = evaluate(&model, &val_set)?;
        log::info!("fold {}/{k}: accuracy {acc:.4}", fi + 1);
        Ok(acc)
    };
    let results: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..k).map(|fi| scope.spawn(move || run_fold(fi))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold thread panicked"))
            .collect()
    });
    let fold_accuracies = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    let var = fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k as f64;
    Ok(CvReport {
        k,
        seed,
        fold_sizes: folds.iter().map(Vec::len).collect(),
        fold_accuracies,
        mean,
        std: var.sqrt(),
    })
}
