//! sEMG grasp recognition: window features and logistic regression.

mod features;
mod model;

pub use features::{
    build_feature_vector, channel_samples, feat_mav, feat_rms, feat_wl, feature_vector_from_rows,
    FeatureConfig, FeatureVector, SemgFrame, Windower, CHANNELS, DEFAULT_WINDOW_LEN,
    FEATURES_PER_CHANNEL, FEATURE_DIM,
};
pub use model::{
    decide, predict_prob, sigmoid, train, Debouncer, GripCommand, GripState, LabeledFeatures,
    LogisticModel, TrainConfig, TrainReport, DEFAULT_DEBOUNCE,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemgError {
    #[error("window has {got} samples, need at least {need}")]
    WindowTooShort { got: usize, need: usize },
    #[error("expected 8 channels, got {got}")]
    ChannelCountMismatch { got: usize },
    #[error("invalid feature config: window_len={window_len}, hop={hop}")]
    InvalidFeatureConfig { window_len: usize, hop: usize },
    #[error("training data contains only one class")]
    SingleClassDataset,
    #[error("training data is empty")]
    EmptyDataset,
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("invalid label {0}, expected 0 or 1")]
    InvalidLabel(i64),
    #[error("learning rate must be positive and l2 non-negative")]
    InvalidTrainConfig,
    #[error("training loss increased at epoch {epoch}: {previous} -> {current}")]
    TrainingDiverged {
        epoch: usize,
        previous: f64,
        current: f64,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
