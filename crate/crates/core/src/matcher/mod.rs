//! Alignment of predicted unobserved nodes to the true unobserved nodes.
//!
//! Predicted and true graphs share the observed nodes (the seeds), but the
//! labels of the unobserved nodes are arbitrary. A permutation of the
//! unobserved block is chosen to minimise `||A - P Â Pᵀ||_F²`, exactly for
//! small blocks and by a Frank–Wolfe relaxation otherwise.

mod lap;
mod sgm;

pub use lap::linear_assignment;
pub use sgm::{
    apply_alignment, binarize_to_density, brute_force_align, qap_objective, sgm_align,
    MatchResult, MatcherConfig, SeededMatchProblem, MAX_BRUTE_FORCE,
};
