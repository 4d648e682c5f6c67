//! Hard thresholding of empirical wavelet coefficients (`d = 1`).

use super::dataset::Dataset;
use super::{Diagnostics, EstimatorKind, FittedEstimator, Predictor};
use crate::classes::coeff::CoeffSeq;
use crate::error::{invalid, Result};
use crate::wavelets::{candidates, DyadicWavelet, WaveletExpansion, WaveletIndex};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `τ = σ √(2 ln n / n)`; `σ` defaults to the dataset's noise level.
    Universal {
        #[serde(default)]
        sigma: Option<f64>,
    },
    Fixed {
        tau: f64,
    },
}

/// Empirical coefficients `(1/n) Σ (Y_i - Ȳ) ψ_{k,ℓ}(X_i)` for `k ≤ max_level`,
/// laid out level by level (`2^k` entries at level `k`).
pub(crate) fn empirical_coefficients(
    data: &Dataset,
    wavelet: &DyadicWavelet,
    max_level: u32,
) -> Vec<Vec<f64>> {
    let mean = data.mean_y();
    let m = wavelet.mothers()[0].clone();
    let mut levels: Vec<Vec<f64>> = (0..=max_level).map(|k| vec![0.0; 1 << k]).collect();
    for (x, y) in data.xs.iter().zip(&data.ys) {
        let r = y - mean;
        for (k, row) in levels.iter_mut().enumerate() {
            let k = k as u32;
            for l in candidates(k, *x).into_iter().flatten() {
                let s = (k as f64).exp2() * x - l as f64;
                row[l as usize] += r * (k as f64 * 0.5).exp2() * m.eval(s);
            }
        }
    }
    let n = data.n() as f64;
    levels.iter_mut().flatten().for_each(|a| *a /= n);
    levels
}

/// `Ȳ + Σ â_{k,ℓ} 1{|â_{k,ℓ}| > τ} ψ_{k,ℓ}` over `k ≤ max_level`.
///
/// Coefficients are taken against the centered outputs; the mean is carried
/// as a separate constant term.
pub fn wavelet_threshold(
    data: &Dataset,
    wavelet: &DyadicWavelet,
    max_level: u32,
    rule: ThresholdRule,
) -> Result<FittedEstimator> {
    if data.d != 1 || wavelet.dim() != 1 {
        return Err(invalid(
            "wavelet thresholding is implemented for d = 1 only",
        ));
    }
    if max_level > 24 {
        return Err(invalid(format!("max_level {max_level} is too large")));
    }
    let n = data.n() as f64;
    let tau = match rule {
        ThresholdRule::Universal { sigma } => {
            let s = sigma.unwrap_or(data.meta.sigma);
            if !(s >= 0.0) {
                return Err(invalid(format!("sigma must be nonnegative, got {s}")));
            }
            s * (2.0 * n.ln() / n).sqrt()
        }
        ThresholdRule::Fixed { tau } => {
            if !(tau >= 0.0) {
                return Err(invalid(format!("threshold must be nonnegative, got {tau}")));
            }
            tau
        }
    };
    let levels = empirical_coefficients(data, wavelet, max_level);
    let mut kept = Vec::new();
    let mut total = 0usize;
    for (k, row) in levels.iter().enumerate() {
        for (l, a) in row.iter().enumerate() {
            total += 1;
            if a.abs() > tau {
                kept.push((WaveletIndex::d1(k as u32, l as u64)?, *a));
            }
        }
    }
    let retained = kept.len();
    let expansion = WaveletExpansion::new(wavelet.clone(), CoeffSeq::from_pairs(kept))?;
    let mut diag = Diagnostics::nonlinear();
    diag.hyperparameters.insert("tau".into(), tau);
    diag.hyperparameters
        .insert("max_level".into(), max_level as f64);
    diag.hyperparameters
        .insert("retained".into(), retained as f64);
    diag.hyperparameters
        .insert("candidates".into(), total as f64);
    let predictor = Predictor::Wavelet {
        expansion,
        mean: data.mean_y(),
    };
    let mut est = FittedEstimator::new(EstimatorKind::WaveletThreshold, 1, predictor, diag);
    est.diagnostics.empirical_risk = super::empirical_risk(&est, data);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn constant_data_keeps_no_detail() {
        let data = Dataset::from_1d(grid(64), vec![0.7; 64]).unwrap();
        let est = wavelet_threshold(
            &data,
            &DyadicWavelet::haar(1),
            4,
            ThresholdRule::Universal { sigma: None },
        )
        .unwrap();
        for t in [0.0, 0.3, 0.9] {
            assert!((est.predict(&[t]) - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_zero_function() {
        let data = Dataset::from_1d(grid(16), vec![0.0; 16]).unwrap();
        let est = wavelet_threshold(
            &data,
            &DyadicWavelet::haar(1),
            3,
            ThresholdRule::Fixed { tau: 0.0 },
        )
        .unwrap();
        assert_eq!(est.predict(&[0.4]), 0.0);
    }

    #[test]
    fn haar_coefficient_on_grid() {
        // ψ_{0,0} sampled on a midpoint grid: centered coefficient is exactly 1.
        let xs = grid(32);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| if *x < 0.5 { 1.0 } else { -1.0 })
            .collect();
        let data = Dataset::from_1d(xs, ys).unwrap();
        let c = empirical_coefficients(&data, &DyadicWavelet::haar(1), 2);
        assert!((c[0][0] - 1.0).abs() < 1e-15);
        assert!(c[1].iter().chain(&c[2]).all(|a| a.abs() < 1e-15));
    }
}
