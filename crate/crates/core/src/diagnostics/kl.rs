use super::CheckReport;
use crate::classes::target::TargetFunction;
use crate::error::{invalid, Error, Result};
use crate::quad;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `‖f - g‖²_{L²([0,1]^d)}` by breakpoint-aware quadrature.
pub fn l2_distance_sq(f: &TargetFunction, g: &TargetFunction) -> Result<f64> {
    let d = f.dim();
    if g.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: g.dim(),
        });
    }
    let sq = |x: &[f64]| {
        let e = f.eval_unchecked(x) - g.eval_unchecked(x);
        e * e
    };
    let breaks = match (f.axis_breakpoints(), g.axis_breakpoints()) {
        (Some(a), Some(b)) => Some(
            a.into_iter()
                .zip(b)
                .map(|(mut u, v)| {
                    u.extend(v);
                    u
                })
                .collect::<Vec<_>>(),
        ),
        _ => None,
    };
    match breaks {
        Some(b) if f.piecewise_polynomial() && g.piecewise_polynomial() => {
            Ok(quad::integrate_box(sq, &vec![0.0; d], &vec![1.0; d], &b))
        }
        b => quad::integrate_box_adaptive(
            sq,
            &vec![0.0; d],
            &vec![1.0; d],
            &b.unwrap_or_default(),
            1e-10,
        ),
    }
}

/// Monte-Carlo KL divergence between the `(X, Y)` laws under `f` and `g`
/// against `‖f - g‖² / (2σ²)`.
///
/// Samples `X ~ U[0,1]^d`, `Y = f(X) + σξ` and averages the log density ratio
/// `((Y - g(X))² - (Y - f(X))²) / (2σ²)`. Passes when the estimate is within
/// three standard errors of the target.
pub fn kl_identity_check(
    f: &TargetFunction,
    g: &TargetFunction,
    sigma: f64,
    mc_points: usize,
    seed: u64,
) -> Result<CheckReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    if mc_points < 2 {
        return Err(invalid("need at least two Monte-Carlo points"));
    }
    let target = l2_distance_sq(f, g)? / (2.0 * sigma * sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = f.dim();
    let mut x = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let s2 = 2.0 * sigma * sigma;
    for _ in 0..mc_points {
        x.iter_mut().for_each(|t| *t = rng.random::<f64>());
        let z: f64 = StandardNormal.sample(&mut rng);
        let (fx, gx) = (f.eval_unchecked(&x), g.eval_unchecked(&x));
        let y = fx + sigma * z;
        let l = ((y - gx).powi(2) - (y - fx).powi(2)) / s2;
        sum += l;
        sum_sq += l * l;
    }
    let m = mc_points as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    let se = (var / m).sqrt();
    let statistic = (mean - target).abs();
    let tolerance = 3.0 * se;
    Ok(CheckReport {
        name: "kl_identity".into(),
        passed: statistic <= tolerance,
        statistic,
        tolerance,
        replications: mc_points,
        seed,
        exploratory: false,
        note: format!("estimate {mean:.6e}, target {target:.6e}"),
    })
}
