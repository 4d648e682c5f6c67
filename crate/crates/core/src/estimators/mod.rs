//! Regression estimators: kernel ridge and Nadaraya–Watson (linear in `Y`),
//! hard wavelet thresholding, and deep ReLU empirical-risk minimizers.

pub mod dataset;
pub mod deep;
pub mod gd;
pub mod kernel;
pub mod krr;
pub mod nw;
pub mod threshold;

pub use dataset::{Dataset, DatasetMeta};
pub use deep::{
    erm_deep_constructive, fit_dictionary, wavelet_budget, Atom, ClassHint, DeepBudget,
    RIDGE_FALLBACK,
};
pub use gd::{
    erm_deep_gd, erm_deep_gd_from, loss_and_gradient, params_flat, random_network, set_params_flat,
    GdConfig,
};
pub use kernel::Kernel;
pub use krr::{default_lambda_grid, kernel_ridge, kernel_ridge_cv, krr_weights, KernelPredictor};
pub use nw::{nadaraya_watson, nw_weights, NwPredictor, Window};
pub use threshold::{wavelet_threshold, ThresholdRule};

use crate::relu_net::ReluNetwork;
use crate::wavelets::WaveletExpansion;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Krr,
    NadarayaWatson,
    WaveletThreshold,
    DeepConstructive,
    DeepGd,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Krr => "krr",
            EstimatorKind::NadarayaWatson => "nadaraya_watson",
            EstimatorKind::WaveletThreshold => "wavelet_threshold",
            EstimatorKind::DeepConstructive => "deep_constructive",
            EstimatorKind::DeepGd => "deep_gd",
        }
    }

    /// Whether the estimator has the form `Σ Y_i φ_i(x; Xⁿ)`.
    pub fn is_linear(self) -> bool {
        matches!(self, EstimatorKind::Krr | EstimatorKind::NadarayaWatson)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `(1/n) Σ (f̂(X_i) - Y_i)²` of the returned predictor.
    pub empirical_risk: f64,
    /// For clipped networks, the same quantity before clipping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unclipped_empirical_risk: Option<f64>,
    pub hyperparameters: BTreeMap<String, f64>,
    pub linear_in_y: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_functional: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Diagnostics {
    pub fn linear(identity: &str) -> Self {
        Self {
            linear_in_y: true,
            weight_functional: Some(identity.to_string()),
            ..Self::default()
        }
    }

    pub fn nonlinear() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predictor {
    Kernel(KernelPredictor),
    NadarayaWatson(NwPredictor),
    Wavelet {
        expansion: WaveletExpansion,
        mean: f64,
    },
    Network {
        network: ReluNetwork,
    },
}

impl Predictor {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Predictor::Kernel(k) => k.eval(x),
            Predictor::NadarayaWatson(p) => p.eval(x),
            Predictor::Wavelet { expansion, mean } => mean + expansion.eval(x),
            Predictor::Network { network } => network.forward_unchecked(x),
        }
    }

    /// Points in `[0, 1]` where a 1-d predictor may fail to be smooth.
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        let mut out = match self {
            Predictor::Kernel(k) => k.kinks(),
            Predictor::NadarayaWatson(p) => p.breakpoints_1d(),
            Predictor::Wavelet { expansion, .. } => expansion
                .axis_breakpoints()
                .into_iter()
                .next()
                .unwrap_or_default(),
            Predictor::Network { network } => network_kinks_1d(network),
        };
        out.retain(|t| *t > 0.0 && *t < 1.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// First-layer kinks `v_j / w_j` of a 1-d network, plus the clip crossings
/// of shallow networks located by bisection on a fine grid.
fn network_kinks_1d(net: &ReluNetwork) -> Vec<f64> {
    if net.input_dim() != 1 {
        return Vec::new();
    }
    let w1 = &net.weights()[0];
    let mut out: Vec<f64> = (0..w1.rows)
        .filter(|&j| w1.get(j, 0) != 0.0)
        .map(|j| net.biases()[0][j] / w1.get(j, 0))
        .collect();
    if let Some(f) = net.arch().clip {
        let grid = 4096;
        let over = |t: f64| net.forward_raw(&[t]).abs() > f;
        let mut prev = over(0.0);
        for i in 1..=grid {
            let b = i as f64 / grid as f64;
            let cur = over(b);
            if cur != prev {
                let (mut lo, mut hi) = ((i - 1) as f64 / grid as f64, b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if over(mid) == prev {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
    }
    out
}

/// A fitted regression function with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedEstimator {
    pub kind: EstimatorKind,
    pub d: usize,
    pub predictor: Predictor,
    pub diagnostics: Diagnostics,
}

impl FittedEstimator {
    pub fn new(
        kind: EstimatorKind,
        d: usize,
        predictor: Predictor,
        diagnostics: Diagnostics,
    ) -> Self {
        Self {
            kind,
            d,
            predictor,
            diagnostics,
        }
    }

    /// `f̂(x)`; `x` must have length `d`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predictor.eval(x)
    }

    /// `f̂` at each row of the row-major `xs`.
    pub fn predict_batch(&self, xs: &[f64]) -> Vec<f64> {
        xs.par_chunks(self.d).map(|x| self.predict(x)).collect()
    }

    pub fn breakpoints_1d(&self) -> Vec<f64> {
        if self.d == 1 {
            self.predictor.breakpoints_1d()
        } else {
            Vec::new()
        }
    }
}

/// `(1/n) Σ (f̂(X_i) - Y_i)²`.
pub fn empirical_risk(est: &FittedEstimator, data: &Dataset) -> f64 {
    let preds = est.predict_batch(&data.xs);
    preds
        .iter()
        .zip(&data.ys)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / data.n() as f64
}
