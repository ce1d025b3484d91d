//! Additive interpretable classifier: four small convolutional sub-networks,
//! one per perceptual feature map, whose bounded scalar responses sum with a
//! global bias into a logistic probability.
//!
//! Parameters and activations are f32 in production; every routine is
//! generic over the scalar so gradient checking can run an f64 twin.

mod gradcheck;
mod layers;
mod loss;
mod model;
mod optim;
mod subnet;
mod train;

pub use gradcheck::{
    compare_grads, finite_difference_grads, gradient_check, min_kink_distance, GradCheckGroup,
    GradCheckReport,
};
pub use layers::{Conv2d, Dense};
pub use loss::{binary_cross_entropy, logistic, PROB_CLAMP};
pub use model::{epu_forward, EpuModel, ModelGrads, Prediction};
pub use optim::{sgd_momentum_step, SgdConfig};
pub use subnet::{ArchConfig, HeadActivation, Subnet, SubnetTrace};
pub use train::{train_epu, EpochStats, TrainConfig};

use thiserror::Error;

/// Scalar the network math runs on. f32 everywhere in production; f64 for
/// finite-difference verification.
pub trait Real:
    num_traits::Float
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::iter::Sum
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn into_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn into_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn into_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("label must be 0 or 1, got {0}")]
    InvalidLabel(u8),
    #[error("model consumes {expected:?} feature maps, got {got:?}")]
    ConfigMismatch { expected: crate::pfm::PfmConfig, got: crate::pfm::PfmConfig },
    #[error("expected {want_h}x{want_w} input, got {got_h}x{got_w}")]
    InputShape { want_h: usize, want_w: usize, got_h: usize, got_w: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value produced during {0}")]
    NonFinite(&'static str),
}
