use super::CheckReport;
use crate::classes::target::TargetFunction;
use crate::error::{invalid, Result};
use crate::estimators::{Dataset, DatasetMeta, FittedEstimator};
use crate::harness::{estimate_l2_risk, RiskMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn risk(est: &FittedEstimator, f: &TargetFunction, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(estimate_l2_risk(est, f, RiskMethod::Auto, 100_000, rng)?.risk)
}

/// Checks `R(f̂, h°) ≤ t R(f̂, f°) + (1 - t) R(f̂, g°)` for `h° = t f° + (1 - t) g°`.
///
/// Each replication draws one `Xⁿ` and one noise vector and reuses them for
/// all targets. The statistic is the largest excess of the left side over
/// the right side, in units of the standard error of the per-replication
/// differences; the check passes when it is at most 3.
///
/// `build` must return estimators linear in `Y`. Anything else is refused
/// unless `exploratory` is set, in which case the outcome is reported with
/// `exploratory = true`.
#[allow(clippy::too_many_arguments)]
pub fn linear_convexity_check<B>(
    build: B,
    f0: &TargetFunction,
    g0: &TargetFunction,
    ts: &[f64],
    n: usize,
    replications: usize,
    sigma: f64,
    seed: u64,
    exploratory: bool,
) -> Result<CheckReport>
where
    B: Fn(&Dataset) -> Result<FittedEstimator>,
{
    if n == 0 || replications < 2 {
        return Err(invalid("need n >= 1 and at least two replications"));
    }
    if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(invalid("t must lie in [0, 1]"));
    }
    let d = f0.dim();
    let hs: Vec<TargetFunction> = ts
        .iter()
        .map(|&t| TargetFunction::linear_combination(vec![(t, f0.clone()), (1.0 - t, g0.clone())]))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // diffs[j][r] = R(h_j) - t_j R(f) - (1 - t_j) R(g) in replication r
    let mut diffs = vec![Vec::with_capacity(replications); ts.len()];
    for _ in 0..replications {
        let xs: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect();
        let fit = |f: &TargetFunction| -> Result<FittedEstimator> {
            let ys = xs
                .chunks(d)
                .zip(&noise)
                .map(|(x, e)| f.eval_unchecked(x) + e)
                .collect();
            let data = Dataset::new(
                d,
                xs.clone(),
                ys,
                DatasetMeta {
                    sigma,
                    seed,
                    target_id: String::new(),
                },
            )?;
            let est = build(&data)?;
            if !(est.kind.is_linear() && est.diagnostics.linear_in_y) && !exploratory {
                return Err(invalid(format!(
                    "{} is not linear in Y; the check is refused",
                    est.kind.name()
                )));
            }
            Ok(est)
        };
        let rf = risk(&fit(f0)?, f0, &mut rng)?;
        let rg = risk(&fit(g0)?, g0, &mut rng)?;
        for (j, (t, h)) in ts.iter().zip(&hs).enumerate() {
            let rh = risk(&fit(h)?, h, &mut rng)?;
            diffs[j].push(rh - t * rf - (1.0 - t) * rg);
        }
    }
    let m = replications as f64;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_excess = 0.0;
    let mut worst_se = 0.0;
    for ds in &diffs {
        let mean = ds.iter().sum::<f64>() / m;
        let var = ds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        let z = if se > 0.0 {
            mean / se
        } else if mean > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if z > worst {
            worst = z;
            worst_excess = mean;
            worst_se = se;
        }
    }
    let statistic = if ts.is_empty() { 0.0 } else { worst };
    Ok(CheckReport {
        name: "linear_convexity".into(),
        passed: statistic <= 3.0,
        statistic,
        tolerance: 3.0,
        replications,
        seed,
        exploratory,
        note: format!("largest mean excess {worst_excess:.3e} with standard error {worst_se:.3e}"),
    })
}
