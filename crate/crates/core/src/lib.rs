pub mod data;
pub mod error;
pub mod layers;
pub mod metrics;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{Real, RngState, Tensor};
