//! Central-difference gradient checking.

use rand::Rng;
use serde::Serialize;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DEFAULT_STEP: f64 = 1e-6;

/// A scalar function of a list of parameter tensors with an analytic gradient.
pub trait Objective {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
    /// Value at the current parameters and a fingerprint of the
    /// piecewise-linear branch taken (constant for smooth objectives).
    fn value(&self) -> Result<(f64, u64)>;
    fn gradient(&self) -> Result<Vec<Tensor>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinates {
    All,
    /// Up to `per_tensor` seeded coordinates from every parameter tensor.
    Sample {
        per_tensor: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates where the ±step probe crossed a relu or pool switch, making
    /// the central difference meaningless there.
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    pub fn merge(self, other: GradCheckReport) -> GradCheckReport {
        GradCheckReport {
            max_rel_error: self.max_rel_error.max(other.max_rel_error),
            checked: self.checked + other.checked,
            skipped_kinks: self.skipped_kinks + other.skipped_kinks,
        }
    }
}

/// `|a - n| / max(1, |a|, |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

pub fn grad_check<O: Objective + ?Sized>(obj: &mut O, step: f64, coords: Coordinates) -> Result<GradCheckReport> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let analytic = obj.gradient()?;
    let (_, base_fp) = obj.value()?;
    let sizes: Vec<usize> = obj.params().iter().map(|t| t.len()).collect();
    if analytic.len() != sizes.len() || analytic.iter().zip(&sizes).any(|(g, &n)| g.len() != n) {
        return Err(Error::shape("gradient does not mirror parameters"));
    }
    let mut report = GradCheckReport::default();
    for (ti, &n) in sizes.iter().enumerate() {
        let picks: Vec<usize> = match coords {
            Coordinates::All => (0..n).collect(),
            Coordinates::Sample { per_tensor, .. } if per_tensor >= n => (0..n).collect(),
            Coordinates::Sample { per_tensor, seed } => {
                let mut rng = rng::stream(seed, Purpose::GradCheck, ti as u64);
                (0..per_tensor).map(|_| rng.random_range(0..n)).collect()
            }
        };
        for i in picks {
            let orig = obj.params()[ti].data()[i];
            obj.params_mut()[ti].data_mut()[i] = orig + step;
            let plus = obj.value();
            obj.params_mut()[ti].data_mut()[i] = orig - step;
            let minus = obj.value();
            obj.params_mut()[ti].data_mut()[i] = orig;
            let ((fp, fp_fp), (fm, fm_fp)) = (plus?, minus?);
            if fp_fp != base_fp || fm_fp != base_fp {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * step);
            let err = relative_error(analytic[ti].data()[i], numeric);
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}
