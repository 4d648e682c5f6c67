use super::{
    bin_concentration_check, hypercube_packing_demo, kl_identity_check, lemma_c,
    linear_convexity_check, quantized_cover_constant, quantized_cover_size, CheckReport, MAX_K,
};
use crate::classes::piecewise::PiecewiseConstantFn;
use crate::classes::target::TargetFunction;
use crate::error::{invalid, Result};
use crate::estimators::{kernel_ridge, Kernel};
use crate::harness::{derive_seed, Stream};

/// Names accepted by [`run_check`], in the order `verify` runs them.
pub const CHECK_NAMES: [&str; 5] = [
    "kl_identity",
    "linear_convexity",
    "bin_concentration",
    "hypercube_packing",
    "quantized_cover",
];

/// Monte-Carlo points per KL pair.
pub const KL_MC_POINTS: usize = 200_000;

fn step(a0: f64, jumps: &[(f64, f64)]) -> Result<TargetFunction> {
    let c = a0.abs() + jumps.iter().map(|j| j.1.abs()).sum::<f64>();
    TargetFunction::from_piecewise(
        PiecewiseConstantFn::new(a0, jumps.to_vec()),
        jumps.len(),
        c.max(1.0),
    )
}

/// The three fixed KL pairs: `f = g`, `f - g ≡ 1`, and `f - g = 1_{[1/2, 1]}`, all at `σ = 1`.
pub fn kl_pairs() -> Result<Vec<(TargetFunction, TargetFunction, f64)>> {
    Ok(vec![
        (step(0.3, &[(0.4, 0.5)])?, step(0.3, &[(0.4, 0.5)])?, 1.0),
        (step(1.0, &[])?, step(0.0, &[])?, 1.0),
        (step(0.0, &[(0.5, 1.0)])?, step(0.0, &[])?, 1.0),
    ])
}

/// Two one-jump targets for the convexity check.
pub fn convexity_pair() -> Result<(TargetFunction, TargetFunction)> {
    Ok((step(0.0, &[(0.3, 1.0)])?, step(0.5, &[(0.7, -1.0)])?))
}

/// Fixed-`λ` KRR used by the convexity check.
pub const CONVEXITY_KERNEL: Kernel = Kernel::Laplace { lengthscale: 0.2 };
pub const CONVEXITY_LAMBDA: f64 = 1e-2;

fn all_of(name: &str, parts: &[CheckReport], seed: u64, note: String) -> CheckReport {
    let worst = parts
        .iter()
        .map(|r| r.statistic - r.tolerance)
        .fold(f64::NEG_INFINITY, f64::max);
    let pick = parts
        .iter()
        .find(|r| r.statistic - r.tolerance == worst)
        .expect("at least one part");
    CheckReport {
        name: name.into(),
        passed: parts.iter().all(|r| r.passed),
        statistic: pick.statistic,
        tolerance: pick.tolerance,
        replications: parts.iter().map(|r| r.replications).sum(),
        seed,
        exploratory: false,
        note,
    }
}

/// Runs one named check with seeds derived from `master_seed`.
pub fn run_check(name: &str, master_seed: u64) -> Result<CheckReport> {
    let idx = CHECK_NAMES.iter().position(|c| *c == name).ok_or_else(|| {
        invalid(format!(
            "unknown check {name:?}; known: {}",
            CHECK_NAMES.join(", ")
        ))
    })?;
    let seed = derive_seed(master_seed, &[Stream::Check.key(), idx as u64]);
    match name {
        "kl_identity" => {
            let parts: Vec<CheckReport> = kl_pairs()?
                .iter()
                .enumerate()
                .map(|(i, (f, g, s))| {
                    kl_identity_check(f, g, *s, KL_MC_POINTS, derive_seed(seed, &[i as u64]))
                })
                .collect::<Result<_>>()?;
            let note = parts
                .iter()
                .map(|r| r.note.as_str())
                .collect::<Vec<_>>()
                .join("; ");
            Ok(all_of(name, &parts, seed, note))
        }
        "linear_convexity" => {
            let (f0, g0) = convexity_pair()?;
            let mut r = linear_convexity_check(
                |d| kernel_ridge(d, CONVEXITY_KERNEL, CONVEXITY_LAMBDA),
                &f0,
                &g0,
                &[0.25, 0.5, 0.75],
                512,
                200,
                0.5,
                seed,
                false,
            )?;
            r.note = format!("fixed-lambda KRR; {}", r.note);
            Ok(r)
        }
        "bin_concentration" => bin_concentration_check(4096, 0.5, lemma_c(0.5)?, 10_000, seed),
        "hypercube_packing" => {
            let parts: Vec<CheckReport> = (1..=MAX_K)
                .map(|k| hypercube_packing_demo(k, 0.1))
                .collect::<Result<_>>()?;
            let rates: Vec<String> = parts
                .iter()
                .map(|r| format!("{:.3}", r.statistic))
                .collect();
            let mut r = all_of(
                name,
                &parts,
                0,
                format!("ln(count)/k for k = 1..{MAX_K}: {}", rates.join(" ")),
            );
            r.statistic = parts
                .iter()
                .map(|r| r.statistic)
                .fold(f64::INFINITY, f64::min);
            r.tolerance = parts[0].tolerance;
            Ok(r)
        }
        "quantized_cover" => {
            let (c1, alpha, beta) = (1.0, 1.0, 1.0);
            let c0 = quantized_cover_constant(c1, alpha, beta)?;
            let mut worst: f64 = 0.0;
            let mut prev = f64::NEG_INFINITY;
            let mut monotone = true;
            for k in 2..=10_000usize {
                let v = quantized_cover_size(k, c1, alpha, beta)?;
                let kf = k as f64;
                worst = worst.max(v / (c0 * kf * (kf.ln() + 1.0)));
                monotone &= v > prev;
                prev = v;
            }
            Ok(CheckReport {
                name: name.into(),
                passed: worst <= 1.0 && monotone,
                statistic: worst,
                tolerance: 1.0,
                replications: 9_999,
                seed: 0,
                exploratory: false,
                note: format!(
                    "largest ratio to C0 k (ln k + 1) over k = 2..10000, C0 = {c0:.4}; increasing in k: {monotone}; shape check only"
                ),
            })
        }
        _ => unreachable!(),
    }
}
