//! Loss, optimizer, schedules, data preparation and the training loop.

mod baseline;
mod fit;
mod loss;
mod lr_finder;
mod optim;
mod scaler;
mod schedule;
mod split;

pub use baseline::{logistic_baseline_fit, logistic_predict, BaselineConfig, BaselineReport};
pub use fit::{accuracy, fit, lr_range_test, predict_dataset, EpochRecord, LrSearch, TrainConfig, TrainingReport};
pub use loss::cross_entropy;
pub use lr_finder::{lr_range_sweep, LrRangeResult};
pub use optim::{amsgrad_step, AmsGradConfig, AmsGradState};
pub use scaler::{ScalerParams, SCALER_MEAN, SCALER_STD};
pub use schedule::{cosine_lr, CosineSchedule};
pub use split::{stratified_allocation, stratified_indices, stratified_split};
