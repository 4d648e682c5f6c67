//! Theoretical rate shapes with unit constants.
//!
//! Every curve here is exponent-correct only; the constants in front are
//! unknown and set to 1, and curves are labelled `shape only`.

use super::config::RateClass;
use crate::error::{invalid, Result};
use crate::estimators::EstimatorKind;
use serde::{Deserialize, Serialize};

pub const SHAPE_ONLY: &str = "shape only";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Upper,
    Lower,
}

/// `n^exponent · (ln n)^log_power` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub label: String,
    pub bound: Bound,
    pub exponent: f64,
    pub log_power: f64,
    pub source: String,
    pub note: String,
    pub points: Vec<(usize, f64)>,
}

impl ReferenceCurve {
    fn new(
        label: &str,
        bound: Bound,
        exponent: f64,
        log_power: f64,
        source: &str,
        grid: &[usize],
    ) -> Self {
        let points = grid
            .iter()
            .map(|&n| (n, shape(n as f64, exponent, log_power)))
            .collect();
        Self {
            label: label.into(),
            bound,
            exponent,
            log_power,
            source: source.into(),
            note: SHAPE_ONLY.into(),
            points,
        }
    }
}

pub fn shape(n: f64, exponent: f64, log_power: f64) -> f64 {
    n.powf(exponent) * n.ln().powf(log_power)
}

/// `α = 1/p - 1/2`.
pub fn alpha(p: f64) -> f64 {
    1.0 / p - 0.5
}

/// `γ = 1/(1 + β)`.
pub fn gamma(beta: f64) -> f64 {
    1.0 / (1.0 + beta)
}

/// Polynomial exponent of the deep upper rate.
pub fn deep_exponent(class: RateClass) -> f64 {
    match class {
        RateClass::Jumps => -1.0,
        RateClass::Wavelet { p, .. } => {
            let a = alpha(p);
            -2.0 * a / (2.0 * a + 1.0)
        }
    }
}

/// Polynomial exponent of the lower rate for estimators linear in `Y`.
pub fn linear_exponent(class: RateClass) -> f64 {
    match class {
        RateClass::Jumps => -0.5,
        RateClass::Wavelet { beta, .. } => -beta * gamma(beta),
    }
}

/// Exponent the measured slope of `kind` is compared with.
pub fn reference_exponent(kind: EstimatorKind, class: RateClass) -> f64 {
    if kind.is_linear() {
        linear_exponent(class)
    } else {
        deep_exponent(class)
    }
}

/// Human-readable origin of [`reference_exponent`].
pub fn reference_source(kind: EstimatorKind, class: RateClass) -> &'static str {
    match (kind.is_linear(), class) {
        (true, RateClass::Jumps) => "lower rate n^(-1/2) for linear estimators on bounded-jump piecewise constant functions",
        (true, RateClass::Wavelet { .. }) => "lower rate n^(-beta/(1+beta)) for linear estimators on weak-lp wavelet classes",
        (false, RateClass::Jumps) => "deep ReLU ERM upper rate (ln n)^3/n on bounded-jump piecewise constant functions",
        (false, RateClass::Wavelet { .. }) => "deep ReLU ERM upper rate n^(-2a/(2a+1))(ln n)^3, a = 1/p - 1/2, on weak-lp wavelet classes",
    }
}

/// Deep upper, minimax lower and linear lower curves for a class.
pub fn reference_curves(class: RateClass, grid: &[usize]) -> Vec<ReferenceCurve> {
    match class {
        RateClass::Jumps => vec![
            ReferenceCurve::new(
                "deep upper",
                Bound::Upper,
                -1.0,
                3.0,
                "deep ReLU ERM on piecewise constant functions",
                grid,
            ),
            ReferenceCurve::new(
                "minimax lower",
                Bound::Lower,
                -1.0,
                0.0,
                "minimax lower rate on piecewise constant functions",
                grid,
            ),
            ReferenceCurve::new(
                "linear lower",
                Bound::Lower,
                -0.5,
                0.0,
                "linear estimators on piecewise constant functions",
                grid,
            ),
        ],
        RateClass::Wavelet { p, beta } => {
            let a = alpha(p);
            let e = -2.0 * a / (2.0 * a + 1.0);
            vec![
                ReferenceCurve::new(
                    "deep upper",
                    Bound::Upper,
                    e,
                    3.0,
                    "deep ReLU ERM on weak-lp wavelet classes",
                    grid,
                ),
                ReferenceCurve::new(
                    "minimax lower",
                    Bound::Lower,
                    e,
                    -4.0 * a * a / (2.0 * a + 1.0),
                    "minimax lower rate on weak-lp wavelet classes",
                    grid,
                ),
                ReferenceCurve::new(
                    "linear lower",
                    Bound::Lower,
                    linear_exponent(RateClass::Wavelet { p, beta }),
                    0.0,
                    "linear estimators on weak-lp wavelet classes",
                    grid,
                ),
            ]
        }
    }
}

/// Minimax lower bound from entropy values: if `V(ε) ≤ nε²/(2σ²)` and
/// `M(δ) ≥ 2nε²/σ² + 2 ln 2`, the minimax risk is at least `δ²/8`.
///
/// `covering` is `V(ε)` and `packing` is `M(δ)`, both natural-log entropies
/// supplied by the caller. Returns `None` when a hypothesis fails.
pub fn entropy_lower_bound(
    covering: f64,
    packing: f64,
    n: usize,
    eps: f64,
    delta: f64,
    sigma: f64,
) -> Result<Option<f64>> {
    if !(eps > 0.0 && delta > 0.0 && sigma > 0.0 && n >= 1) {
        return Err(invalid("need eps, delta, sigma > 0 and n >= 1"));
    }
    let nf = n as f64;
    let s2 = sigma * sigma;
    let ok = covering <= nf * eps * eps / (2.0 * s2)
        && packing >= 2.0 * nf * eps * eps / s2 + 2.0 * std::f64::consts::LN_2;
    Ok(ok.then(|| delta * delta / 8.0))
}

/// Risk bound of an ERM over a class with covering entropy `V ≥ 1` at radius
/// `δ`: `4·approx + C((F² + σ²) V / n + (F + σ) δ)` with `C = 1`.
pub fn erm_risk_bound(
    approx: f64,
    entropy: f64,
    n: usize,
    clip: f64,
    sigma: f64,
    delta: f64,
) -> Result<f64> {
    if entropy < 1.0 {
        return Err(invalid(format!(
            "the entropy must be at least 1, got {entropy}"
        )));
    }
    if n == 0 || !(approx >= 0.0 && clip > 0.0 && sigma >= 0.0 && delta > 0.0) {
        return Err(invalid(
            "need n >= 1, approx >= 0, F > 0, sigma >= 0, delta > 0",
        ));
    }
    let nf = n as f64;
    Ok(4.0 * approx + (clip * clip + sigma * sigma) * entropy / nf + (clip + sigma) * delta)
}
