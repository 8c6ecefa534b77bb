//! Detector post-processing: IoU, per-class greedy non-max suppression and
//! conversion of the surviving boxes into entity labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_KEEP: usize = 5;

/// Axis-aligned box in corner form with a detection score and class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub score: f64,
    pub label: String,
}

impl DetBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, score: f64, label: impl Into<String>) -> Self {
        DetBox {
            x_min,
            y_min,
            x_max,
            y_max,
            score,
            label: label.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("box coordinates"));
        }
        if self.x_max < self.x_min || self.y_max < self.y_min {
            return Err(Error::invalid(format!(
                "box ({}, {}, {}, {}) has max < min",
                self.x_min, self.y_min, self.x_max, self.y_max
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::invalid(format!("box score {} outside [0, 1]", self.score)));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

/// Intersection over union. Zero when the union has no area.
pub fn iou(a: &DetBox, b: &DetBox) -> Result<f64> {
    for bx in [a, b] {
        if bx.x_max < bx.x_min || bx.y_max < bx.y_min {
            return Err(Error::invalid("box has max < min"));
        }
    }
    Ok(iou_unchecked(a, b))
}

fn iou_unchecked(a: &DetBox, b: &DetBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Indices of `boxes` sorted by score, highest first; equal scores keep input
/// order.
fn by_score(boxes: &[DetBox]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&i, &j| boxes[j].score.total_cmp(&boxes[i].score));
    order
}

/// Greedy per-class NMS. A box is discarded when a higher-ranked kept box of
/// the same class overlaps it with IoU strictly above `iou_threshold`. The
/// survivors are truncated to the `max_keep` best scores.
///
/// Returns input indices of the kept boxes in descending score order.
pub fn nms_indices(boxes: &[DetBox], iou_threshold: f64, max_keep: usize) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::invalid(format!("IoU threshold {iou_threshold} outside [0, 1]")));
    }
    if max_keep == 0 {
        return Err(Error::invalid("max_keep must be at least 1"));
    }
    for b in boxes {
        b.validate()?;
    }
    let order = by_score(boxes);
    let mut suppressed = vec![false; boxes.len()];
    let mut kept = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(i);
        for &j in &order[rank + 1..] {
            if !suppressed[j] && boxes[j].label == boxes[i].label && iou_unchecked(&boxes[i], &boxes[j]) > iou_threshold
            {
                suppressed[j] = true;
            }
        }
    }
    kept.truncate(max_keep);
    Ok(kept)
}

pub fn nms(boxes: &[DetBox], iou_threshold: f64, max_keep: usize) -> Result<Vec<DetBox>> {
    Ok(nms_indices(boxes, iou_threshold, max_keep)?
        .into_iter()
        .map(|i| boxes[i].clone())
        .collect())
}

/// Distinct class labels ordered by each label's best score (ties: first seen).
pub fn entities_from_boxes(boxes: &[DetBox]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for &i in &by_score(boxes) {
        if !labels.contains(&boxes[i].label) {
            labels.push(boxes[i].label.clone());
        }
    }
    labels
}
