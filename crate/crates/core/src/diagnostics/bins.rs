use super::CheckReport;
use crate::error::{invalid, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest `c` with `(2c - 1) ln 2 ≥ 2 + γ max_{n≥1} ln n / n^{1-γ}`.
///
/// The maximum is attained at `n = e^{1/(1-γ)}` and equals `1/(e(1 - γ))`.
pub fn lemma_c(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let peak = 1.0 / (std::f64::consts::E * (1.0 - gamma));
    Ok(0.5 * ((2.0 + gamma * peak) / std::f64::consts::LN_2 + 1.0))
}

/// Integer `m` with `m ≤ n^γ ≤ 2m`.
pub fn bin_count_for(n: usize, gamma: f64) -> Result<usize> {
    let target = (n as f64).powf(gamma);
    let m = target.floor() as usize;
    if m >= 1 && (m as f64) <= target && target <= 2.0 * m as f64 {
        Ok(m)
    } else {
        Err(Error::Infeasible(format!(
            "no integer m satisfies m <= {target} <= 2m"
        )))
    }
}

/// Frequency of `max_k A_k ≥ cn/m` when `n` uniform points fall into `m`
/// equal bins, over `replications` draws.
///
/// Passes when the frequency is at most `max(2^{-n^{1-γ}}, 5/R)`.
pub fn bin_concentration_check(
    n: usize,
    gamma: f64,
    c: f64,
    replications: usize,
    seed: u64,
) -> Result<CheckReport> {
    if n == 0 || replications == 0 {
        return Err(invalid("need n >= 1 and at least one replication"));
    }
    let m = bin_count_for(n, gamma)?;
    let threshold = c * n as f64 / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; m];
    let mut hits = 0usize;
    for _ in 0..replications {
        counts.iter_mut().for_each(|a| *a = 0);
        for _ in 0..n {
            counts[rng.random_range(0..m)] += 1;
        }
        if counts.iter().any(|&a| a as f64 >= threshold) {
            hits += 1;
        }
    }
    let freq = hits as f64 / replications as f64;
    let bound = 2f64.powf(-(n as f64).powf(1.0 - gamma));
    let tolerance = bound.max(5.0 / replications as f64);
    Ok(CheckReport {
        name: "bin_concentration".into(),
        passed: freq <= tolerance,
        statistic: freq,
        tolerance,
        replications,
        seed,
        exploratory: false,
        note: format!("m = {m}, c = {c:.6}, threshold {threshold:.3}, bound {bound:.3e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_constant() {
        let c = lemma_c(0.5).unwrap();
        let lhs = (2.0 * c - 1.0) * std::f64::consts::LN_2;
        assert!((lhs - (2.0 + 1.0 / std::f64::consts::E)).abs() < 1e-12);
        assert!((c - 2.2081).abs() < 1e-3);
        assert_eq!(bin_count_for(4096, 0.5).unwrap(), 64);
        assert_eq!(bin_count_for(3, 0.5).unwrap(), 1);
    }

    #[test]
    fn single_bin() {
        let r = bin_concentration_check(10, 0.01, 1.0, 20, 0).unwrap();
        assert_eq!(r.statistic, 1.0);
        let r = bin_concentration_check(10, 0.01, 1.5, 20, 0).unwrap();
        assert_eq!(r.statistic, 0.0);
    }
}
