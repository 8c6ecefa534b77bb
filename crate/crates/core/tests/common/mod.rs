#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semlink::detect::DetBox;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Overlap area over union area, straight from the corner coordinates.
pub fn oracle_iou(a: &DetBox, b: &DetBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Selection-based NMS: per class, scan all live boxes for the best one
/// (highest score, then lowest index), keep it and kill every live box of
/// that class overlapping it above the threshold. Survivors of all classes are
/// ranked the same way and cut to `max_keep`.
pub fn oracle_nms(boxes: &[DetBox], threshold: f64, max_keep: usize) -> Vec<usize> {
    let better = |i: usize, j: usize| boxes[i].score > boxes[j].score || (boxes[i].score == boxes[j].score && i < j);
    let mut alive = vec![true; boxes.len()];
    let mut kept = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in 0..boxes.len() {
            if alive[i] && best.is_none_or(|b| better(i, b)) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        kept.push(b);
        for j in 0..boxes.len() {
            if alive[j] && boxes[j].label == boxes[b].label && (j == b || oracle_iou(&boxes[b], &boxes[j]) > threshold)
            {
                alive[j] = false;
            }
        }
    }
    kept.truncate(max_keep);
    kept
}

/// Boxes on a coarse grid so that exact score ties and exact-threshold
/// overlaps actually occur.
pub fn random_boxes(rng: &mut ChaCha8Rng, n: usize) -> Vec<DetBox> {
    const LABELS: [&str; 3] = ["person", "dog", "cat"];
    (0..n)
        .map(|_| {
            let x = rng.random_range(0..20) as f64;
            let y = rng.random_range(0..20) as f64;
            let w = rng.random_range(0..8) as f64;
            let h = rng.random_range(0..8) as f64;
            let score = rng.random_range(0..=10) as f64 / 10.0;
            DetBox::new(x, y, x + w, y + h, score, LABELS[rng.random_range(0..LABELS.len())])
        })
        .collect()
}

pub fn random_box(rng: &mut ChaCha8Rng) -> DetBox {
    let x = rng.random_range(-500.0..500.0);
    let y = rng.random_range(-500.0..500.0);
    let w = rng.random_range(0.0..200.0);
    let h = rng.random_range(0.0..200.0);
    DetBox::new(x, y, x + w, y + h, rng.random_range(0.0..=1.0), "x")
}
