//! Minimal differentiable neural kernel: dense matrices, fully connected
//! stacks, graph attention and graph convolution layers, the interaction
//! modules, reverse-mode gradients and Adam. Everything runs in `f64`.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod dense;
pub mod gnn;
pub mod gradcheck;
pub mod graph;
pub mod matrix;
pub mod params;
pub mod tape;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState};
pub use dense::{fcn_forward, mutual_interaction, self_interaction, DenseLayer, Fcn, MutualInteraction, SelfInteraction};
pub use gnn::{gat_forward, gcn_forward, AttentionHead, GatLayer, GcnLayer, GraphLayer, HeadCombine};
pub use graph::Adjacency;
pub use matrix::Matrix;
pub use params::{ParamId, ParamStore};
pub use tape::{Gradients, ParamGrads, Tape, Var};
