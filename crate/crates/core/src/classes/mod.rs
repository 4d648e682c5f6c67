//! Target function classes on `[0, 1]^d`: piecewise-constant functions with
//! bounded jumps, ℓ⁰-bounded affine sums, and sparse coefficient sequences.

pub mod affine;
pub mod coeff;
pub mod piecewise;
pub mod target;

pub use affine::{
    affine_class_sup_bound, sample_affine_map, sample_affine_sum, AffineAtom, AffineMap, AffineSum,
    BaseFunction, Profile,
};
pub use coeff::{
    l0_norm, lp_norm, tail_compactness_check, weak_lp_norm, weak_lp_norm_values, ClassBounds,
    CoeffIndex, CoeffSeq, Ordinal, TailCheck, TailOrdering,
};
pub use piecewise::{sample_piecewise, total_variation, PiecewiseConstantFn};
pub use target::{
    eval_target, sample_i0, sample_jk, TargetClass, TargetFunction, TargetKind, WeightedTarget,
};
