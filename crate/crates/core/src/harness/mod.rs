//! Data generation, risk estimation, seeded sweeps over sample sizes, slope
//! fitting, reference rates and result files.

pub mod config;
pub mod data;
pub mod plot;
pub mod rate;
pub mod reference;
pub mod risk;
pub mod seed;
pub mod sweep;

pub use config::{
    BandwidthPolicy, EstimatorEntry, EstimatorSpec, ExperimentConfig, GdSchedule, LambdaPolicy,
    OutputSpec, RateClass, RiskMethod, RiskSpec, TargetSpec,
};
pub use data::{generate_data, target_id};
pub use plot::render_svg;
pub use rate::{fit_rate, RateFit};
pub use reference::{
    deep_exponent, entropy_lower_bound, erm_risk_bound, linear_exponent, reference_curves,
    reference_exponent, ReferenceCurve,
};
pub use risk::{estimate_l2_risk, exact_l2_risk, mc_l2_risk, RiskEstimate};
pub use seed::{derive_seed, rng_for, Stream};
pub use sweep::{
    build_reports, cell_data, cell_target, fit_entry, read_csv, run_sweep, write_csv,
    write_outputs, AggregateCell, CellFailure, CellRecord, RateReport, SweepResult,
};
