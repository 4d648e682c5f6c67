//! Nadaraya–Watson local averaging `f̂(x) = Σ K_h(x - X_i) Y_i / Σ K_h(x - X_i)`.

use super::dataset::Dataset;
use super::{Diagnostics, EstimatorKind, FittedEstimator, Predictor};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Gaussian weights are truncated at this many bandwidths in `d = 1`.
const GAUSS_CUTOFF: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// `1{‖x - X_i‖_∞ ≤ h}`.
    Box,
    /// `exp(-‖x - X_i‖² / (2h²))`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
struct Sorted {
    xs: Vec<f64>,
    ys: Vec<f64>,
    prefix: Vec<f64>,
}

/// Stores the training sample; points with no weight in their window get the
/// global mean of `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawNw", into = "RawNw")]
pub struct NwPredictor {
    pub window: Window,
    pub bandwidth: f64,
    pub d: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    mean: f64,
    sorted: Option<Sorted>,
}

#[derive(Serialize, Deserialize)]
struct RawNw {
    window: Window,
    bandwidth: f64,
    d: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl From<RawNw> for NwPredictor {
    fn from(r: RawNw) -> Self {
        NwPredictor::new(r.window, r.bandwidth, r.d, r.xs, r.ys)
    }
}

impl From<NwPredictor> for RawNw {
    fn from(p: NwPredictor) -> Self {
        RawNw {
            window: p.window,
            bandwidth: p.bandwidth,
            d: p.d,
            xs: p.xs,
            ys: p.ys,
        }
    }
}

impl NwPredictor {
    fn new(window: Window, bandwidth: f64, d: usize, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
        let sorted = (d == 1).then(|| {
            let mut order: Vec<usize> = (0..ys.len()).collect();
            order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
            let sx: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
            let sy: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
            let mut prefix = Vec::with_capacity(sy.len() + 1);
            prefix.push(0.0);
            for y in &sy {
                prefix.push(prefix.last().unwrap() + y);
            }
            Sorted {
                xs: sx,
                ys: sy,
                prefix,
            }
        });
        Self {
            window,
            bandwidth,
            d,
            xs,
            ys,
            mean,
            sorted,
        }
    }

    fn kernel(&self, x: &[f64], xi: &[f64]) -> f64 {
        match self.window {
            Window::Box => {
                let h = self.bandwidth;
                let inside = x.iter().zip(xi).all(|(a, b)| *b >= a - h && *b <= a + h);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Window::Gaussian => {
                let d2: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * self.bandwidth * self.bandwidth)).exp()
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let h = self.bandwidth;
        if let Some(s) = &self.sorted {
            let t = x[0];
            match self.window {
                Window::Box => {
                    let a = s.xs.partition_point(|v| *v < t - h);
                    let b = s.xs.partition_point(|v| *v <= t + h);
                    if b > a {
                        return (s.prefix[b] - s.prefix[a]) / (b - a) as f64;
                    }
                    return self.mean;
                }
                Window::Gaussian => {
                    let a = s.xs.partition_point(|v| *v < t - GAUSS_CUTOFF * h);
                    let b = s.xs.partition_point(|v| *v <= t + GAUSS_CUTOFF * h);
                    let (mut num, mut den) = (0.0, 0.0);
                    for i in a..b {
                        let k = self.kernel(x, &s.xs[i..i + 1]);
                        num += k * s.ys[i];
                        den += k;
                    }
                    return if den > 0.0 { num / den } else { self.mean };
                }
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (xi, y) in self.xs.chunks(self.d).zip(&self.ys) {
            let k = self.kernel(x, xi);
            num += k * y;
            den += k;
        }
        if den > 0.0 {
            num / den
        } else {
            self.mean
        }
    }

    /// `φ_i(x; Xⁿ)` with `f̂(x) = Σ Y_i φ_i(x)`.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        let n = self.ys.len();
        let mut w: Vec<f64> = self
            .xs
            .chunks(self.d)
            .map(|xi| self.kernel(x, xi))
            .collect();
        if self.window == Window::Gaussian && self.d == 1 {
            for (wi, xi) in w.iter_mut().zip(&self.xs) {
                if (x[0] - xi).abs() > GAUSS_CUTOFF * self.bandwidth {
                    *wi = 0.0;
                }
            }
        }
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|v| *v /= total);
        } else {
            w = vec![1.0 / n as f64; n];
        }
        w
    }

    /// Window edges `X_i ± h` of the box estimator in `d = 1`.
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        match (self.window, self.d) {
            (Window::Box, 1) => self
                .xs
                .iter()
                .flat_map(|x| [x - self.bandwidth, x + self.bandwidth])
                .collect(),
            _ => Vec::new(),
        }
    }
}

pub fn nadaraya_watson(data: &Dataset, bandwidth: f64, window: Window) -> Result<FittedEstimator> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let pred = NwPredictor::new(window, bandwidth, data.d, data.xs.clone(), data.ys.clone());
    let mut diag = Diagnostics::linear(
        "f(x) = sum_i K_h(x - X_i) Y_i / sum_j K_h(x - X_j), global mean if the window is empty",
    );
    diag.hyperparameters.insert("bandwidth".into(), bandwidth);
    let mut est = FittedEstimator::new(
        EstimatorKind::NadarayaWatson,
        data.d,
        Predictor::NadarayaWatson(pred),
        diag,
    );
    est.diagnostics.empirical_risk = super::empirical_risk(&est, data);
    Ok(est)
}

/// Weights of a fitted Nadaraya–Watson estimator at `x`.
pub fn nw_weights(est: &FittedEstimator, x: &[f64]) -> Option<Vec<f64>> {
    match &est.predictor {
        Predictor::NadarayaWatson(p) => Some(p.weights(x)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_constant() {
        let data = Dataset::from_1d(vec![0.4], vec![2.5]).unwrap();
        for w in [Window::Box, Window::Gaussian] {
            let est = nadaraya_watson(&data, 0.1, w).unwrap();
            for t in [0.0, 0.4, 0.99] {
                assert_eq!(est.predict(&[t]), 2.5);
            }
        }
    }

    #[test]
    fn three_point_box_oracle() {
        let data = Dataset::from_1d(vec![0.1, 0.3, 0.8], vec![1.0, 4.0, -2.0]).unwrap();
        let est = nadaraya_watson(&data, 0.25, Window::Box).unwrap();
        assert!((est.predict(&[0.2]) - 2.5).abs() < 1e-15);
        assert!((est.predict(&[0.6]) + 2.0).abs() < 1e-15);
        assert!((est.predict(&[0.95]) + 2.0).abs() < 1e-15);
        assert!((est.predict(&[0.0]) - 1.0).abs() < 1e-15);
        let narrow = nadaraya_watson(&data, 0.01, Window::Box).unwrap();
        assert!((narrow.predict(&[0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sorted_path_matches_naive() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 49.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (7.0 * x).sin()).collect();
        let data = Dataset::from_1d(xs, ys).unwrap();
        for w in [Window::Box, Window::Gaussian] {
            let est = nadaraya_watson(&data, 0.07, w).unwrap();
            let Predictor::NadarayaWatson(p) = &est.predictor else {
                unreachable!()
            };
            for t in [0.0, 0.31, 0.5, 0.93] {
                let via: f64 = p
                    .weights(&[t])
                    .iter()
                    .zip(&data.ys)
                    .map(|(a, b)| a * b)
                    .sum();
                assert!((via - est.predict(&[t])).abs() < 1e-12);
            }
        }
    }
}
