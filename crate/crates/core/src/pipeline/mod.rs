//! The end-to-end segmentation model: superpixel graph features through the
//! structural network, reconstruction onto the pixel grid, and per-pixel
//! classification.

pub mod config;
pub mod model;
pub mod train;

#[cfg(test)]
mod tests;

pub use config::{ClassifierConfig, GnnKind, GnnSegConfig};
pub use model::{
    labels_from_logits, reconstruct_slice, GnnSegModel, Inference, ParameterCount, PreparedSlice,
    CLASSIFIER_PREFIX, STRUCTURAL_PREFIX,
};
pub use train::{train, Control, EpochSummary, TrainConfig, TrainReport};
