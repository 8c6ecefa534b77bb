use super::{loss_grad, Classifier, ModelKind, Pass, Sample};
use super::{CONV_BLOCKS, CONV_FILTERS, EMBEDDING_DIM, IMAGE_DIM, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::gradcheck::{grad_check, Coordinates, GradCheckReport, Objective};
use crate::nn::layers::POOL_WINDOW;
use crate::nn::{Activation, DropoutStream, LayerSpec, Mode, Sequential, Tensor};

const BASELINE_DROPOUT: f64 = 0.5;
const FUSION_HIDDEN: usize = 64;
/// Init streams for the fusion head start here, clear of the conv branch.
const HEAD_STREAM: u64 = 100;

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::shape(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn check_label(label: usize) -> Result<()> {
    if label >= NUM_CLASSES {
        return Err(Error::invalid(format!("class index {label} outside 0..{NUM_CLASSES}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    net: Sequential,
}

impl BaselineModel {
    pub fn layer_specs() -> Vec<LayerSpec> {
        let dense = |input, output, activation| LayerSpec::Dense {
            input,
            output,
            activation,
        };
        let dropout = LayerSpec::Dropout { rate: BASELINE_DROPOUT };
        vec![
            dense(EMBEDDING_DIM, 128, Activation::Relu),
            dropout,
            dense(128, 64, Activation::Relu),
            dropout,
            dense(64, 64, Activation::Relu),
            dropout,
            dense(64, NUM_CLASSES, Activation::Linear),
            LayerSpec::Softmax,
        ]
    }

    pub fn new(seed: u64) -> Result<Self> {
        Ok(BaselineModel {
            net: Sequential::new(&Self::layer_specs(), seed, 0)?,
        })
    }

    pub fn network(&self) -> &Sequential {
        &self.net
    }
}

impl Classifier for BaselineModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Baseline
    }

    fn params(&self) -> Vec<&Tensor> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.net.params_mut()
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        check_len("embedding", sample.embedding.len(), EMBEDDING_DIM)?;
        check_label(sample.label)
    }

    fn forward(&self, sample: &Sample, mode: Mode, dropout: &mut DropoutStream) -> Result<Pass> {
        check_len("embedding", sample.embedding.len(), EMBEDDING_DIM)?;
        let (out, trace) = self
            .net
            .forward(&Tensor::vector(sample.embedding.clone()), mode, dropout)?;
        Ok(Pass {
            probs: out.into_data(),
            traces: vec![trace],
        })
    }

    fn backward(&self, pass: &Pass, label: usize, grads: &mut [Tensor]) -> Result<()> {
        let dy = loss_grad(pass, label)?;
        self.net.backward(&pass.traces[0], dy, grads)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    branch: Sequential,
    head: Sequential,
    filters: usize,
}

impl FusionModel {
    pub fn new(seed: u64) -> Result<Self> {
        Self::with_filters(seed, CONV_FILTERS)
    }

    pub fn with_filters(seed: u64, filters: usize) -> Result<Self> {
        if filters == 0 {
            return Err(Error::invalid("conv filter count must be positive"));
        }
        Ok(FusionModel {
            branch: Sequential::new(&Self::branch_specs(filters), seed, 0)?,
            head: Sequential::new(&Self::head_specs(filters), seed, HEAD_STREAM)?,
            filters,
        })
    }

    pub fn branch_specs(filters: usize) -> Vec<LayerSpec> {
        (0..CONV_BLOCKS)
            .flat_map(|i| {
                [
                    LayerSpec::Conv1d {
                        in_channels: if i == 0 { 1 } else { filters },
                        filters,
                        activation: Activation::Relu,
                    },
                    LayerSpec::MaxPool1d,
                ]
            })
            .collect()
    }

    pub fn head_specs(filters: usize) -> Vec<LayerSpec> {
        vec![
            LayerSpec::Dense {
                input: Self::concat_width_for(filters),
                output: FUSION_HIDDEN,
                activation: Activation::Relu,
            },
            LayerSpec::Dense {
                input: FUSION_HIDDEN,
                output: NUM_CLASSES,
                activation: Activation::Linear,
            },
            LayerSpec::Softmax,
        ]
    }

    /// Spatial length of the image branch output: 4096 halved five times.
    pub fn branch_output_len() -> usize {
        IMAGE_DIM / POOL_WINDOW.pow(CONV_BLOCKS as u32)
    }

    fn concat_width_for(filters: usize) -> usize {
        Self::branch_output_len() * filters + EMBEDDING_DIM
    }

    /// Width of the flattened image branch plus the entity embedding.
    pub fn concat_width(&self) -> usize {
        Self::concat_width_for(self.filters)
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn output_width(&self) -> usize {
        match self.head.specs().iter().rev().find_map(|s| match s {
            LayerSpec::Dense { output, .. } => Some(*output),
            _ => None,
        }) {
            Some(w) => w,
            None => unreachable!("head ends in a dense layer"),
        }
    }

    pub fn branch(&self) -> &Sequential {
        &self.branch
    }

    pub fn head(&self) -> &Sequential {
        &self.head
    }

    /// The image embedding alone: the flattened conv branch output.
    pub fn image_embedding(&self, image: &[f64]) -> Result<Vec<f64>> {
        check_len("image feature", image.len(), IMAGE_DIM)?;
        let x = Tensor::from_vec(&[1, IMAGE_DIM], image.to_vec())?;
        let (out, _) = self.branch.forward(&x, Mode::Eval, &mut DropoutStream::new(0))?;
        Ok(out.into_data())
    }
}

impl Classifier for FusionModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Fusion
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut p = self.branch.params();
        p.extend(self.head.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.branch.params_mut();
        p.extend(self.head.params_mut());
        p
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        check_len("image feature", sample.image.len(), IMAGE_DIM)?;
        check_len("embedding", sample.embedding.len(), EMBEDDING_DIM)?;
        check_label(sample.label)
    }

    fn forward(&self, sample: &Sample, mode: Mode, dropout: &mut DropoutStream) -> Result<Pass> {
        check_len("image feature", sample.image.len(), IMAGE_DIM)?;
        check_len("embedding", sample.embedding.len(), EMBEDDING_DIM)?;
        let x = Tensor::from_vec(&[1, IMAGE_DIM], sample.image.clone())?;
        let (img, branch_trace) = self.branch.forward(&x, mode, dropout)?;
        let mut joined = img.into_data();
        joined.extend_from_slice(&sample.embedding);
        let (out, head_trace) = self.head.forward(&Tensor::vector(joined), mode, dropout)?;
        Ok(Pass {
            probs: out.into_data(),
            traces: vec![branch_trace, head_trace],
        })
    }

    fn backward(&self, pass: &Pass, label: usize, grads: &mut [Tensor]) -> Result<()> {
        let dy = loss_grad(pass, label)?;
        let nb = self.branch.params().len();
        let (gb, gh) = grads.split_at_mut(nb);
        let djoined = self.head.backward(&pass.traces[1], dy, gh)?;
        let img_len = Self::branch_output_len() * self.filters;
        let dimg = Tensor::from_vec(
            &[self.filters, Self::branch_output_len()],
            djoined.data()[..img_len].to_vec(),
        )?;
        self.branch.backward(&pass.traces[0], dimg, gb)?;
        Ok(())
    }
}

/// Cross-entropy of one sample as a function of the model parameters, with
/// dropout disabled.
struct SampleLoss<'a, M: Classifier> {
    model: &'a mut M,
    sample: &'a Sample,
}

impl<M: Classifier> Objective for SampleLoss<'_, M> {
    fn params(&self) -> Vec<&Tensor> {
        self.model.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.model.params_mut()
    }

    fn value(&self) -> Result<(f64, u64)> {
        let pass = self
            .model
            .forward(self.sample, Mode::Eval, &mut DropoutStream::new(0))?;
        let loss = crate::nn::loss::class_cross_entropy(self.sample.label, &pass.probs);
        Ok((loss, pass.fingerprint()))
    }

    fn gradient(&self) -> Result<Vec<Tensor>> {
        let mut grads = self.model.zero_grads();
        self.model
            .accumulate(self.sample, Mode::Eval, &mut DropoutStream::new(0), &mut grads)?;
        Ok(grads)
    }
}

/// Finite-difference check of a classifier's backward pass on one sample.
pub fn classifier_grad_check<M: Classifier>(
    model: &mut M,
    sample: &Sample,
    step: f64,
    coords: Coordinates,
) -> Result<GradCheckReport> {
    model.check_sample(sample)?;
    let mut obj = SampleLoss { model, sample };
    grad_check(&mut obj, step, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::softmax;
    use crate::rng::{self, Purpose};
    use rand::Rng;

    fn random_sample(seed: u64) -> Sample {
        let mut rng = rng::stream(seed, Purpose::Synthetic, 0);
        Sample {
            image: (0..IMAGE_DIM).map(|_| rng.random_range(0.0..1.0)).collect(),
            embedding: (0..EMBEDDING_DIM).map(|_| rng.random_range(-1.0..1.0)).collect(),
            label: rng.random_range(0..NUM_CLASSES),
        }
    }

    #[test]
    fn baseline_shapes() {
        let m = BaselineModel::new(1).unwrap();
        assert_eq!(
            m.param_count(),
            100 * 128 + 128 + 128 * 64 + 64 + 64 * 64 + 64 + 64 * 12 + 12
        );
        assert_eq!(m.param_count(), 26_124);
        let p = m.probabilities(&random_sample(0)).unwrap();
        assert_eq!(p.len(), 12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m, BaselineModel::new(1).unwrap());
    }

    #[test]
    fn fusion_shapes() {
        let m = FusionModel::new(1).unwrap();
        assert_eq!(FusionModel::branch_output_len(), 128);
        assert_eq!(m.concat_width(), 1124);
        assert_eq!(m.output_width(), 12);
        assert_eq!(m.image_embedding(&vec![0.5; IMAGE_DIM]).unwrap().len(), 1024);
        let zero = Sample {
            image: vec![0.0; IMAGE_DIM],
            embedding: vec![0.0; EMBEDDING_DIM],
            label: 0,
        };
        let p = m.probabilities(&zero).unwrap();
        assert_eq!(p.len(), 12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_lengths() {
        let m = FusionModel::new(1).unwrap();
        let mut s = random_sample(1);
        s.image.pop();
        assert!(matches!(m.probabilities(&s), Err(Error::Shape(_))));
        let b = BaselineModel::new(1).unwrap();
        let mut s = random_sample(1);
        s.embedding.push(0.0);
        assert!(b.probabilities(&s).is_err());
        let mut s = random_sample(1);
        s.label = 12;
        assert!(b.check_sample(&s).is_err());
    }

    #[test]
    fn zeroed_filters_make_fusion_ignore_image() {
        let mut m = FusionModel::new(3).unwrap();
        let nb = m.branch().params().len();
        for t in m.params_mut().into_iter().take(nb) {
            t.fill(0.0);
        }
        let a = random_sample(10);
        let mut b = random_sample(11);
        b.embedding = a.embedding.clone();
        assert_eq!(m.probabilities(&a).unwrap(), m.probabilities(&b).unwrap());
    }

    #[test]
    fn zero_weight_dense_gradient_closed_form() {
        // Single dense layer + softmax-CE: dW = (softmax(b) - onehot) ⊗ x.
        let specs = [
            LayerSpec::Dense {
                input: 3,
                output: 4,
                activation: Activation::Linear,
            },
            LayerSpec::Softmax,
        ];
        let mut net = Sequential::new(&specs, 0, 0).unwrap();
        net.params_mut()[0].fill(0.0);
        let bias = [0.1, -0.3, 0.7, 0.0];
        net.params_mut()[1].data_mut().copy_from_slice(&bias);
        let x = [0.5, -1.0, 2.0];
        let label = 2;
        let mut ds = DropoutStream::new(0);
        let (out, trace) = net.forward(&Tensor::vector(x.to_vec()), Mode::Eval, &mut ds).unwrap();
        let dy = Tensor::vector(crate::nn::loss::class_cross_entropy_grad(label, out.data()));
        let mut grads = net.zero_grads();
        net.backward(&trace, dy, &mut grads).unwrap();
        let p = softmax(&bias).unwrap();
        for o in 0..4 {
            let delta = p[o] - if o == label { 1.0 } else { 0.0 };
            for i in 0..3 {
                assert!((grads[0].data()[o * 3 + i] - delta * x[i]).abs() < 1e-12);
            }
            assert!((grads[1].data()[o] - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_sample_batch_matches_single() {
        let m = BaselineModel::new(4).unwrap();
        let s = random_sample(4);
        let mut one = m.zero_grads();
        m.accumulate(&s, Mode::Eval, &mut DropoutStream::new(0), &mut one)
            .unwrap();
        let mut two = m.zero_grads();
        for _ in 0..2 {
            m.accumulate(&s, Mode::Eval, &mut DropoutStream::new(0), &mut two)
                .unwrap();
        }
        for (a, b) in one.iter().zip(&two) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y / 2.0).abs() <= 1e-15 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn random_three_layer_nets_pass_grad_check() {
        for draw in 0..20u64 {
            let mut rng = rng::stream(draw, Purpose::GradCheck, 1);
            let (a, b, c) = (rng.random_range(2..8), rng.random_range(2..8), rng.random_range(2..6));
            let specs = [
                LayerSpec::Dense {
                    input: a,
                    output: b,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    input: b,
                    output: b,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    input: b,
                    output: c,
                    activation: Activation::Linear,
                },
                LayerSpec::Softmax,
            ];
            let net = Sequential::new(&specs, draw, 0).unwrap();
            let x: Vec<f64> = (0..a).map(|_| rng.random_range(-1.0..1.0)).collect();
            let label = rng.random_range(0..c);
            let mut obj = NetLoss { net, x, label };
            let r = grad_check(&mut obj, 1e-6, Coordinates::All).unwrap();
            assert!(r.max_rel_error <= 1e-5, "draw {draw}: {r:?}");
        }
    }

    struct NetLoss {
        net: Sequential,
        x: Vec<f64>,
        label: usize,
    }

    impl Objective for NetLoss {
        fn params(&self) -> Vec<&Tensor> {
            self.net.params()
        }
        fn params_mut(&mut self) -> Vec<&mut Tensor> {
            self.net.params_mut()
        }
        fn value(&self) -> Result<(f64, u64)> {
            let (out, trace) =
                self.net
                    .forward(&Tensor::vector(self.x.clone()), Mode::Eval, &mut DropoutStream::new(0))?;
            Ok((-out.data()[self.label].ln(), trace.fingerprint))
        }
        fn gradient(&self) -> Result<Vec<Tensor>> {
            let (out, trace) =
                self.net
                    .forward(&Tensor::vector(self.x.clone()), Mode::Eval, &mut DropoutStream::new(0))?;
            let mut g = self.net.zero_grads();
            let dy = Tensor::vector(crate::nn::loss::class_cross_entropy_grad(self.label, out.data()));
            self.net.backward(&trace, dy, &mut g)?;
            Ok(g)
        }
    }

    #[test]
    fn conv_stack_grad_check_small() {
        // A short conv/pool stack exercises every conv and pool backward path.
        let specs = [
            LayerSpec::Conv1d {
                in_channels: 2,
                filters: 3,
                activation: Activation::Relu,
            },
            LayerSpec::MaxPool1d,
            LayerSpec::Conv1d {
                in_channels: 3,
                filters: 2,
                activation: Activation::Linear,
            },
            LayerSpec::MaxPool1d,
            LayerSpec::Dense {
                input: 4,
                output: 3,
                activation: Activation::Linear,
            },
            LayerSpec::Softmax,
        ];
        for draw in 0..10u64 {
            let mut net = Sequential::new(&specs, draw, 0).unwrap();
            let mut rng = rng::stream(draw, Purpose::GradCheck, 2);
            for t in net.params_mut() {
                t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            }
            let xs: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = Tensor::from_vec(&[2, 9], xs).unwrap();
            let mut obj = ConvLoss {
                net,
                x,
                label: draw as usize % 3,
            };
            let r = grad_check(&mut obj, 1e-6, Coordinates::All).unwrap();
            assert!(r.max_rel_error <= 1e-5, "draw {draw}: {r:?}");
            assert!(r.checked > 0);
        }
    }

    struct ConvLoss {
        net: Sequential,
        x: Tensor,
        label: usize,
    }

    impl Objective for ConvLoss {
        fn params(&self) -> Vec<&Tensor> {
            self.net.params()
        }
        fn params_mut(&mut self) -> Vec<&mut Tensor> {
            self.net.params_mut()
        }
        fn value(&self) -> Result<(f64, u64)> {
            let (out, trace) = self.net.forward(&self.x, Mode::Eval, &mut DropoutStream::new(0))?;
            Ok((-out.data()[self.label].ln(), trace.fingerprint))
        }
        fn gradient(&self) -> Result<Vec<Tensor>> {
            let (out, trace) = self.net.forward(&self.x, Mode::Eval, &mut DropoutStream::new(0))?;
            let mut g = self.net.zero_grads();
            let dy = Tensor::vector(crate::nn::loss::class_cross_entropy_grad(self.label, out.data()));
            self.net.backward(&trace, dy, &mut g)?;
            Ok(g)
        }
    }
}
