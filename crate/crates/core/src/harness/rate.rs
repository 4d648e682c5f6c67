use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of usable points for a slope fit.
pub const MIN_RATE_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Points that entered the fit.
    pub points: usize,
}

/// Ordinary least squares of `ln risk` on `ln n`. Points with nonpositive or
/// non-finite risk are dropped with a warning.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, r) in points {
        if r > 0.0 && r.is_finite() && n > 0.0 {
            xs.push(n.ln());
            ys.push(r.ln());
        } else {
            log::warn!("dropping point (n = {n}, risk = {r}) from the rate fit");
        }
    }
    let m = xs.len();
    if m < MIN_RATE_POINTS {
        return Err(Error::TooFewPoints(m));
    }
    let mf = m as f64;
    let mx = xs.iter().sum::<f64>() / mf;
    let my = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit needs at least two distinct n".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = (rss / (mf - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        slope_se,
        points: m,
    })
}
