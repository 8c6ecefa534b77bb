//! Fixed-seed synthetic datasets for convergence checks and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Sample, EMBEDDING_DIM, IMAGE_DIM, NUM_CLASSES};
use crate::rng::{self, Purpose};

/// `n` samples from 12 Gaussian clusters in R¹⁰⁰: class centres are drawn
/// N(0, 1) per coordinate, samples add N(0, 1) noise. Labels cycle through the
/// classes so every class is equally represented. `image` is left empty.
pub fn gaussian_clusters(n: usize, seed: u64) -> Vec<Sample> {
    let mut centre_rng = rng::stream(seed, Purpose::Synthetic, 0);
    let centres: Vec<Vec<f64>> = (0..NUM_CLASSES)
        .map(|_| (0..EMBEDDING_DIM).map(|_| standard_normal(&mut centre_rng)).collect())
        .collect();
    let mut rng = rng::stream(seed, Purpose::Synthetic, 1);
    (0..n)
        .map(|i| {
            let label = i % NUM_CLASSES;
            Sample {
                image: Vec::new(),
                embedding: centres[label].iter().map(|c| c + standard_normal(&mut rng)).collect(),
                label,
            }
        })
        .collect()
}

/// Image + embedding analogue of [`gaussian_clusters`]. Each class has a
/// non-negative 4096-d image prototype (mimicking post-relu CNN features) and
/// a 100-d embedding centre; samples perturb both with noise.
/// `embedding_noise` scales the embedding noise so the image path can be made
/// to matter.
pub fn fusion_clusters(n: usize, seed: u64, embedding_noise: f64) -> Vec<Sample> {
    let mut proto_rng = rng::stream(seed, Purpose::Synthetic, 2);
    let images: Vec<Vec<f64>> = (0..NUM_CLASSES)
        .map(|_| {
            (0..IMAGE_DIM)
                .map(|_| standard_normal(&mut proto_rng).max(0.0))
                .collect()
        })
        .collect();
    let centres: Vec<Vec<f64>> = (0..NUM_CLASSES)
        .map(|_| (0..EMBEDDING_DIM).map(|_| standard_normal(&mut proto_rng)).collect())
        .collect();
    let mut rng = rng::stream(seed, Purpose::Synthetic, 3);
    (0..n)
        .map(|i| {
            let label = i % NUM_CLASSES;
            Sample {
                image: images[label]
                    .iter()
                    .map(|p| (p + 0.5 * standard_normal(&mut rng)).max(0.0))
                    .collect(),
                embedding: centres[label]
                    .iter()
                    .map(|c| c + embedding_noise * standard_normal(&mut rng))
                    .collect(),
                label,
            }
        })
        .collect()
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}
