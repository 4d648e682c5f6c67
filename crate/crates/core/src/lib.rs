//! Minimax-rate benchmarking for sparse nonparametric regression.
//!
//! The crate provides sparse target function classes on `[0, 1]^d`, dyadic
//! wavelet machinery, ReLU networks with constructive builders and entropy
//! calculators, linear and deep estimators, and a seeded Monte-Carlo harness
//! that measures `L²` risk against sample size and fits log-log slopes.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod classes;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod quad;
pub mod relu_net;
pub mod wavelets;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/classes.md")]
    mod classes {}
    #[doc = include_str!("../../../book/src/wavelets.md")]
    mod wavelets {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
