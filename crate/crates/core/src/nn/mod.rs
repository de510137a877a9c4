//! Small dense-tensor neural network engine for the localization CNN.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod loss;
pub mod model;
pub mod pool;
pub mod tensor;
pub mod train;

pub use adam::AdamState;
pub use checkpoint::Checkpoint;
pub use model::{forward, Mode, NetworkParams};
pub use tensor::Tensor4;
pub use train::{train, TrainConfig, TrainOutcome, TrainingSet};
