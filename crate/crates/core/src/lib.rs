//! Network completion: infer the edges of nodes that were never observed.
//!
//! The proposed method trains a GIN auto-encoder on the observed block and
//! periodically resamples the unobserved region from density-matched decoder
//! probabilities. Predictions are aligned to the ground truth by seeded graph
//! matching before region-wise AUC/AP evaluation. The guide under `book/`
//! walks through each stage.

pub mod baselines;
pub mod completer;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod matcher;
pub mod matrix;
pub mod metrics;
pub mod nn;

pub use error::{Error, Result};
pub use graph::{Graph, HideResult, PartialGraph};
pub use matrix::Matrix;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/problem.md")]
    mod problem {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/completion.md")]
    mod completion {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
