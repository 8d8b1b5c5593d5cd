//! One-bit graph signal imputation.
//!
//! Building blocks for recovering real-valued graph signals from sign
//! observations on a random subset of nodes: graph construction and spectral
//! tools, the sign/mask observation model, a small dense network library, the
//! graph-regularized adversarial imputer, a gradient-descent baseline, and
//! dataset generation and file formats.

pub mod baseline;
pub mod data;
pub mod error;
pub mod gan;
pub mod graph;
pub mod idx;
pub mod nn;
pub mod observe;
pub mod rng;
pub mod signal;
pub mod spectral;

pub use baseline::{gd_impute, GdConfig};
pub use data::{Dataset, Metrics, Normalization};
pub use error::{Error, Result};
pub use gan::{EpochLosses, GanConfig, TrainerState};
pub use graph::{knn_graph, Graph, KnnWeighting};
pub use nn::{Activation, DenseNet, NetRole};
pub use observe::Observation;
pub use signal::{QuadraticPrior, Regularizer};
pub use spectral::{decompose_graph, spectral_decompose, ShiftOperator, SpectralDecomposition};
