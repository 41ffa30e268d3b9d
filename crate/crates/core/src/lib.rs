//! Residual convolutional networks for single-image super-resolution.
//!
//! Tensors and hand-written gradients live in [`tensor`]; [`arch`] builds
//! networks from strings like `16_3,32_3,64_3`; [`data`] turns images into
//! degraded training pairs; [`optim`] trains; [`metrics`] scores.

pub mod arch;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod experiments;
pub mod fsutil;
pub mod metrics;
pub mod optim;
pub mod tensor;

pub use error::{CheckpointError, Error, Result};
