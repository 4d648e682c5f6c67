//! ReLU networks `𝒩(L, S, D, B)`: evaluation, constraint checking, entropy
//! bounds and constructive builders.

mod builders;
mod entropy;
mod network;
mod shared;

pub use builders::{
    box_sum_network, build_jump_approx, build_jump_approx_deep, compose_atoms, composed_arch,
    ramp_spline, step_ramp, WeightedBox,
};
pub use entropy::{covering_entropy_bound, shared_entropy_bound};
pub use network::{
    clip, forward, validate_against, validate_arch, ArchReport, Dense, NetworkArch, ReluNetwork,
    Violation, NETWORK_FORMAT_VERSION,
};
pub use shared::{eval_shared, SharedAtom, SharedFamily};
