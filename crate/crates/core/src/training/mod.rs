//! Loss, metrics, user split, training loop and ensembling.

pub mod baseline;
pub mod dataset;
pub mod ensemble;
pub mod loss;
pub mod metrics;
pub mod split;
pub mod train;

pub use baseline::QuestionMeanBaseline;
pub use dataset::{build_dataset, windows_for, Dataset, DatasetConfig};
pub use ensemble::{check_compatible, ensemble_predict, evaluate, member_predictions, report_from_predictions, mean, EvalReport};
pub use loss::{bce_loss, bce_with_logit};
pub use metrics::auc;
pub use split::{split_users, TRAIN_RATIO};
pub use train::{train, train_with, EpochLog, TrainConfig, TrainOutcome, DESK_ENSEMBLE_HEADS, FULL_ENSEMBLE_HEADS};
