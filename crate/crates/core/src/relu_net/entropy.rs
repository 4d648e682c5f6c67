//! Covering-entropy bounds for sparse ReLU classes. All logarithms are natural.

use super::NetworkArch;
use crate::error::{invalid, Result};

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `2S(L+1) ln(B(L+1)(D+1)/δ)`: bound on `log N(δ, 𝒩(L, S, D, B), ‖·‖_∞)`.
pub fn covering_entropy_bound(arch: &NetworkArch, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (l, s, d, b) = (
        arch.depth as f64,
        arch.sparsity as f64,
        arch.width as f64,
        arch.bound,
    );
    if !(b > 0.0) {
        return Err(invalid(format!("B must be positive, got {b}")));
    }
    Ok(2.0 * s * (l + 1.0) * (b * (l + 1.0) * (d + 1.0) / delta).ln())
}

/// `(N(d+1)² + 2S(L+1))(L+3) ln(NB(L+1)(D+1)/δ)`: bound for the `N`-sharing
/// family built on `𝒩(L, S, D, B)` with input dimension `d`. Needs `L ≥ 2`.
pub fn shared_entropy_bound(arch: &NetworkArch, n: usize, d: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(invalid("the shared family needs N >= 1"));
    }
    if arch.depth < 2 {
        return Err(invalid(format!(
            "the sharing bound needs L >= 2, got {}",
            arch.depth
        )));
    }
    if d == 0 {
        return Err(invalid("input dimension must be positive"));
    }
    let (l, s, w, b) = (
        arch.depth as f64,
        arch.sparsity as f64,
        arch.width as f64,
        arch.bound,
    );
    if !(b > 0.0) {
        return Err(invalid(format!("B must be positive, got {b}")));
    }
    let nf = n as f64;
    let df = d as f64;
    let params = nf * (df + 1.0).powi(2) + 2.0 * s * (l + 1.0);
    Ok(params * (l + 3.0) * (nf * b * (l + 1.0) * (w + 1.0) / delta).ln())
}
