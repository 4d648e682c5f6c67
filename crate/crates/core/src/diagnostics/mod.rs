//! Executable checks of side results: the KL identity for Gaussian noise,
//! convexity of the risk of linear estimators, bin-count concentration,
//! hypercube packing and the quantized-coefficient cover.

mod bins;
mod convexity;
mod cover;
mod kl;
mod packing;
mod suite;

pub use bins::{bin_concentration_check, bin_count_for, lemma_c};
pub use convexity::linear_convexity_check;
pub use cover::{cover_entropy_at, quantized_cover_constant, quantized_cover_size};
pub use kl::{kl_identity_check, l2_distance_sq};
pub use packing::{brute_force_packing, greedy_packing, hypercube_packing_demo, MAX_K};
pub use suite::{
    convexity_pair, kl_pairs, run_check, CHECK_NAMES, CONVEXITY_KERNEL, CONVEXITY_LAMBDA,
    KL_MC_POINTS,
};

use serde::{Deserialize, Serialize};

/// Outcome of one check. `statistic` and `tolerance` are always set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub statistic: f64,
    pub tolerance: f64,
    pub replications: usize,
    pub seed: u64,
    /// Reported without pass/fail meaning.
    #[serde(default)]
    pub exploratory: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}
