//! Compact multi-label learning: joint feature/label embeddings that
//! maximize the dependence between the embedded spaces while keeping the
//! labels recoverable, plus baselines, metrics and an experiment harness.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod data;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod learner;
pub mod linalg;
pub mod metrics;
pub mod model_io;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mat = linalg::Matrix<f64>;
pub type Mat32 = linalg::Matrix<f32>;
pub type Data = data::Dataset<f64>;
pub type Data32 = data::Dataset<f32>;
pub type Params = embedding::CmllParams<f64>;
pub type Model = embedding::CmllModel<f64>;
pub type KernelModel = embedding::KcmllModel<f64>;
pub type Kernel = embedding::KernelSpec<f64>;
pub type Config = harness::ExperimentConfig<f64>;
pub type Pipe = learner::Pipeline<f64>;
