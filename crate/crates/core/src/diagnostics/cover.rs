use crate::error::{invalid, Result};
use statrs::function::gamma::ln_gamma;

fn ln_binom(m: f64, k: f64) -> f64 {
    if m > 1e3 * k {
        // direct sum for m ≫ k
        let head: f64 = (0..k as u64).map(|i| (-(i as f64) / m).ln_1p()).sum();
        k * m.ln() + head - ln_gamma(k + 1.0)
    } else {
        ln_gamma(m + 1.0) - ln_gamma(k + 1.0) - ln_gamma(m - k + 1.0)
    }
}

fn check(k: usize, c1: f64, alpha: f64, beta: f64) -> Result<f64> {
    if k < 2 {
        return Err(invalid(format!("k must be at least 2, got {k}")));
    }
    if !(c1 > 0.0 && alpha > 0.0 && beta > 0.0) {
        return Err(invalid("C1, alpha and beta must be positive"));
    }
    let r = 2.0 * alpha / beta;
    if r < 1.0 {
        return Err(invalid(format!("need 2 alpha / beta >= 1, got {r}")));
    }
    Ok(r)
}

/// `ln [ binom(⌈k^{2α/β}⌉, k) (2 C₁ k^{1/2+α} + 1)^k ]`: the log size of the
/// cover that keeps `k` of the first `⌈k^{2α/β}⌉` coefficients and rounds
/// each to a grid.
pub fn quantized_cover_size(k: usize, c1: f64, alpha: f64, beta: f64) -> Result<f64> {
    let r = check(k, c1, alpha, beta)?;
    let kf = k as f64;
    let m = kf.powf(r).ceil();
    Ok(ln_binom(m, kf) + kf * (2.0 * c1 * kf.powf(0.5 + alpha) + 1.0).ln())
}

/// `C₀` with `quantized_cover_size(k) ≤ C₀ k (ln k + 1)` for every `k ≥ 2`.
///
/// Sum of the bounds on the two addends: `ln binom(M, k) ≤ k ln(eM/k)` with
/// `M ≤ 2k^{2α/β}`, and `ln(2C₁k^{1/2+α} + 1) ≤ ln(2C₁ + 1) + (1/2 + α) ln k`.
pub fn quantized_cover_constant(c1: f64, alpha: f64, beta: f64) -> Result<f64> {
    let r = check(2, c1, alpha, beta)?;
    Ok(1.0 + std::f64::consts::LN_2 + (r - 1.0) + (2.0 * c1 + 1.0).ln() + 0.5 + alpha)
}

/// The cover size at resolution `ε`, with `k = max(2, ⌈ε^{-1/α}⌉)`.
pub fn cover_entropy_at(eps: f64, c1: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let k = (eps.powf(-1.0 / alpha).ceil() as usize).max(2);
    quantized_cover_size(k, c1, alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_case_by_hand() {
        // k = 2, 2α/β = 1: binom(2, 2) = 1, grid (2·1·2^{1}+1)² = 25
        let v = quantized_cover_size(2, 1.0, 0.5, 1.0).unwrap();
        assert!((v - 25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn domain() {
        assert!(quantized_cover_size(1, 1.0, 1.0, 1.0).is_err());
        assert!(quantized_cover_size(4, 1.0, 0.25, 1.0).is_err());
        assert!(cover_entropy_at(0.0, 1.0, 1.0, 1.0).is_err());
    }
}
