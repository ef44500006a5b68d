//! Superpixel graph segmentation of multi-modality brain slices.
//!
//! The pipeline partitions a slice into SNIC superpixels, builds their
//! region adjacency graph, learns a per-superpixel structural feature with a
//! graph attention network and two fully connected streams, paints that
//! feature back onto the pixel grid and classifies every pixel into
//! background, CSF, GM or WM.

pub mod cli;
pub mod error;
pub mod graphbuild;
pub mod imagecore;
pub mod io;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod superpixel;

pub use error::{Error, Result};
