use super::config::RiskMethod;
use crate::classes::target::TargetFunction;
use crate::error::{Error, Result};
use crate::estimators::FittedEstimator;
use crate::quad;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Uniform cells added to the breakpoints in the exact 1-d path.
pub const EXACT_GRID_CELLS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    /// `‖f̂ - f°‖²_{L²}`.
    pub risk: f64,
    /// Monte-Carlo standard error; 0 for quadrature.
    pub se: f64,
    pub exact: bool,
}

/// Breakpoint-aware quadrature of `(f̂ - f°)²` on `[0, 1]`.
pub fn exact_l2_risk(est: &FittedEstimator, f: &TargetFunction) -> Result<f64> {
    if est.d != 1 || f.dim() != 1 {
        return Err(Error::Quadrature("exact risk needs d = 1".into()));
    }
    let mut breaks = f
        .breakpoints_1d()
        .ok_or_else(|| Error::Quadrature("target breakpoints unknown".into()))?;
    breaks.extend(est.breakpoints_1d());
    breaks.extend((1..EXACT_GRID_CELLS).map(|i| i as f64 / EXACT_GRID_CELLS as f64));
    let r = quad::integrate_pieces(
        |x| {
            let d = est.predict(&[x]) - f.eval_unchecked(&[x]);
            d * d
        },
        0.0,
        1.0,
        &breaks,
    );
    if !r.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral {r}")));
    }
    Ok(r.max(0.0))
}

/// Mean of `(f̂ - f°)²` over `points` uniform draws, with its standard error.
pub fn mc_l2_risk<R: Rng + ?Sized>(
    est: &FittedEstimator,
    f: &TargetFunction,
    points: usize,
    rng: &mut R,
) -> RiskEstimate {
    let d = f.dim();
    let xs: Vec<f64> = (0..points * d).map(|_| rng.random::<f64>()).collect();
    let preds = est.predict_batch(&xs);
    let sq: Vec<f64> = xs
        .chunks(d)
        .zip(&preds)
        .map(|(x, p)| {
            let e = p - f.eval_unchecked(x);
            e * e
        })
        .collect();
    let m = points as f64;
    let mean = sq.iter().sum::<f64>() / m;
    let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    RiskEstimate {
        risk: mean,
        se: (var / m).sqrt(),
        exact: false,
    }
}

/// `‖f̂ - f°‖²_{L²}` by the requested method. A failed exact path falls back
/// to Monte Carlo with a warning.
pub fn estimate_l2_risk<R: Rng + ?Sized>(
    est: &FittedEstimator,
    f: &TargetFunction,
    method: RiskMethod,
    mc_points: usize,
    rng: &mut R,
) -> Result<RiskEstimate> {
    if est.d != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            got: est.d,
        });
    }
    let try_exact = match method {
        RiskMethod::Exact => true,
        RiskMethod::Auto => f.dim() == 1 && f.breakpoints_1d().is_some(),
        RiskMethod::MonteCarlo => false,
    };
    if try_exact {
        match exact_l2_risk(est, f) {
            Ok(risk) => {
                return Ok(RiskEstimate {
                    risk,
                    se: 0.0,
                    exact: true,
                })
            }
            Err(e) => log::warn!("exact risk failed ({e}); falling back to Monte Carlo"),
        }
    }
    Ok(mc_l2_risk(est, f, mc_points, rng))
}
