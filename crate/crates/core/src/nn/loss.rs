use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Max-subtracted softmax.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::Empty("softmax input"));
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Ok(out)
}

/// Vector-Jacobian product of softmax: `p ⊙ (dy − ⟨dy, p⟩)`.
pub fn softmax_backward(probs: &[f64], dy: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(dy).map(|(p, g)| p * g).sum();
    probs.iter().zip(dy).map(|(p, g)| p * (g - dot)).collect()
}

/// Categorical cross-entropy against a one-hot target.
pub fn cross_entropy(one_hot_target: &[f64], predicted: &[f64]) -> Result<f64> {
    let class = one_hot_index(one_hot_target)?;
    if predicted.len() != one_hot_target.len() {
        return Err(Error::shape(format!(
            "target has {} classes, prediction has {}",
            one_hot_target.len(),
            predicted.len()
        )));
    }
    Ok(class_cross_entropy(class, predicted))
}

pub fn class_cross_entropy(class: usize, predicted: &[f64]) -> f64 {
    -predicted[class].max(PROB_FLOOR).ln()
}

/// d loss / d predicted. Zero once the clamp is active, where the loss is flat.
pub fn class_cross_entropy_grad(class: usize, predicted: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; predicted.len()];
    let p = predicted[class];
    if p > PROB_FLOOR {
        g[class] = -1.0 / p;
    }
    g
}

pub fn one_hot(class: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[class] = 1.0;
    v
}

fn one_hot_index(target: &[f64]) -> Result<usize> {
    let mut hot = None;
    for (i, &v) in target.iter().enumerate() {
        if v == 1.0 && hot.is_none() {
            hot = Some(i);
        } else if v != 0.0 {
            return Err(Error::invalid("target is not one-hot"));
        }
    }
    hot.ok_or_else(|| Error::invalid("target is not one-hot"))
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
