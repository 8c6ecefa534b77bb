//! Deterministic fp64 neural-network kernel: dense, dropout, 1-D convolution,
//! 1-D max-pool, softmax, categorical cross-entropy, Adam and a
//! finite-difference gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod tensor;

pub use adam::Adam;
pub use gradcheck::{grad_check, Coordinates, GradCheckReport, Objective};
pub use layers::{
    conv1d_forward, dense_forward, dropout_forward, maxpool1d_forward, Activation, DropoutStream, LayerSpec, Mode,
    Sequential, Trace,
};
pub use loss::{argmax, cross_entropy, softmax};
pub use tensor::Tensor;
