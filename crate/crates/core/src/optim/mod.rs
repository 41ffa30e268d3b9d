//! Loss, gradient clipping, momentum SGD and the epoch loop.

mod config;
mod loss;
mod sgd;
mod train;

pub use config::{parse_key_values, Objective, TrainConfig};
pub use loss::{euclidean_loss, residual_loss};
pub use sgd::{clip_gradients, lr_at, sgd_step, OptimizerState};
pub use train::{
    history_csv, predict, train, train_step, validate, write_history, BestSnapshot, EpochRecord,
    TrainReport, Validation,
};
