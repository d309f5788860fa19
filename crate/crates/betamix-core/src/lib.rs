//! Correlation-network discovery from pairwise angle statistics.
//!
//! The pipeline: standardize an n×P data matrix, compute every pairwise
//! squared-sine statistic z = sin²θ = 1 − r², fit a two-component beta
//! mixture by EM (a fixed-form null component for unrelated pairs and a
//! flexible component for associated pairs), then declare graph edges
//! either by a null-quantile screening rule or by thresholding posterior
//! null probabilities. Downstream graph procedures (variable selection,
//! centrality clustering, majority-rule classification) and a simulation
//! harness for accuracy scoring are included.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature enables `std::error::Error` impls and the `parallel` feature
//! adds multi-threaded kernels whose results are bitwise identical to the
//! single-threaded ones.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod graph;
pub mod mixture;
pub mod pairs;
pub mod sim;
pub mod special;

mod float;
mod linalg;
mod sum;

pub use data::{parse_delimited, standardize, DataMatrix, NaPolicy};
pub use error::{Error, Result};
pub use graph::{bayes_edges, frequentist_edges, Graph};
pub use mixture::{fit, FitOptions, FitResult};
pub use pairs::{pairwise_z, ZVector};
