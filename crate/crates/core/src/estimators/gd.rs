//! Full-parameter gradient descent on the squared loss. Carries no optimality
//! guarantee; it exists to compare against the restricted ERM.

use super::dataset::Dataset;
use super::{Diagnostics, EstimatorKind, FittedEstimator, Predictor};
use crate::error::{invalid, Error, Result};
use crate::relu_net::{NetworkArch, ReluNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub epochs: usize,
    pub step: f64,
    pub seed: u64,
    /// Keep only the `S` largest parameters at the end.
    #[serde(default)]
    pub prune: bool,
}

/// Parameters in the order `W_1, v_1, W_2, v_2, …, W_{L+1}` (row-major).
pub fn params_flat(net: &ReluNetwork) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, w) in net.weights().iter().enumerate() {
        out.extend_from_slice(&w.data);
        if let Some(v) = net.biases().get(i) {
            out.extend_from_slice(v);
        }
    }
    out
}

/// Inverse of [`params_flat`].
pub fn set_params_flat(net: &mut ReluNetwork, p: &[f64]) -> Result<()> {
    let expected = params_flat(net).len();
    if p.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: p.len(),
        });
    }
    let (ws, bs) = net.parts_mut();
    let mut at = 0;
    for (i, w) in ws.iter_mut().enumerate() {
        let len = w.data.len();
        w.data.copy_from_slice(&p[at..at + len]);
        at += len;
        if let Some(v) = bs.get_mut(i) {
            let len = v.len();
            v.copy_from_slice(&p[at..at + len]);
            at += len;
        }
    }
    Ok(())
}

/// `(1/n) Σ (f(X_i) - Y_i)²` of the unclipped network and its gradient with
/// respect to [`params_flat`].
pub fn loss_and_gradient(net: &ReluNetwork, data: &Dataset) -> (f64, Vec<f64>) {
    let ws = net.weights();
    let bs = net.biases();
    let layers = bs.len();
    let mut grad_w: Vec<Vec<f64>> = ws.iter().map(|w| vec![0.0; w.data.len()]).collect();
    let mut grad_b: Vec<Vec<f64>> = bs.iter().map(|b| vec![0.0; b.len()]).collect();
    let n = data.n() as f64;
    let mut loss = 0.0;
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
    for i in 0..data.n() {
        acts.clear();
        acts.push(data.x(i).to_vec());
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(layers);
        for (w, v) in ws.iter().zip(bs) {
            let h = hidden.last().unwrap_or(&acts[0]);
            let z: Vec<f64> = (0..w.rows)
                .map(|r| w.row(r).iter().zip(h).map(|(a, b)| a * b).sum::<f64>() - v[r])
                .collect();
            hidden.push(z.iter().map(|t| t.max(0.0)).collect());
            acts.push(z);
        }
        let last = hidden.last().unwrap_or(&acts[0]);
        let out_w = &ws[layers];
        let out: f64 = out_w.row(0).iter().zip(last).map(|(a, b)| a * b).sum();
        let r = out - data.ys[i];
        loss += r * r / n;
        let delta = 2.0 * r / n;
        for (g, h) in grad_w[layers].iter_mut().zip(last) {
            *g += delta * h;
        }
        let mut g_h: Vec<f64> = out_w.row(0).iter().map(|a| a * delta).collect();
        for l in (0..layers).rev() {
            let z = &acts[l + 1];
            let d: Vec<f64> = g_h
                .iter()
                .zip(z)
                .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
                .collect();
            let input = if l == 0 { &acts[0] } else { &hidden[l - 1] };
            let w = &ws[l];
            for r in 0..w.rows {
                if d[r] == 0.0 {
                    continue;
                }
                for c in 0..w.cols {
                    grad_w[l][r * w.cols + c] += d[r] * input[c];
                }
                grad_b[l][r] -= d[r];
            }
            g_h = (0..w.cols)
                .map(|c| (0..w.rows).map(|r| w.get(r, c) * d[r]).sum())
                .collect();
        }
    }
    let mut flat = Vec::new();
    for (i, g) in grad_w.into_iter().enumerate() {
        flat.extend(g);
        if let Some(b) = grad_b.get(i) {
            flat.extend_from_slice(b);
        }
    }
    (loss, flat)
}

/// Random initialization `U[-√(6/fan_in), √(6/fan_in)]` for weights and
/// `U[-0.1, 0.1]` for biases, clamped to `B`, at hidden width `D`.
pub fn random_network(arch: &NetworkArch, d: usize, seed: u64) -> Result<ReluNetwork> {
    arch.check(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = ReluNetwork::zero(*arch, d);
    let b = arch.bound;
    let (ws, bs) = net.parts_mut();
    for (i, w) in ws.iter_mut().enumerate() {
        let a = (6.0 / w.cols as f64).sqrt();
        w.data
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-a..a).clamp(-b, b));
        if let Some(v) = bs.get_mut(i) {
            v.iter_mut()
                .for_each(|t| *t = rng.random_range(-0.1..0.1f64).clamp(-b, b));
        }
    }
    Ok(net)
}

/// [`erm_deep_gd_from`] starting at [`random_network`]`(arch, d, cfg.seed)`.
pub fn erm_deep_gd(data: &Dataset, arch: &NetworkArch, cfg: &GdConfig) -> Result<FittedEstimator> {
    let init = random_network(arch, data.d, cfg.seed)?;
    erm_deep_gd_from(data, init, cfg)
}

/// Gradient descent from `init`, clamping every parameter to `[-B, B]` after
/// each step. Aborts with [`Error::Diverged`] on a non-finite loss.
pub fn erm_deep_gd_from(
    data: &Dataset,
    init: ReluNetwork,
    cfg: &GdConfig,
) -> Result<FittedEstimator> {
    if init.input_dim() != data.d {
        return Err(Error::Dimension {
            expected: init.input_dim(),
            got: data.d,
        });
    }
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(invalid(format!("step must be positive, got {}", cfg.step)));
    }
    let mut net = init;
    let b = net.arch().bound;
    let mut p = params_flat(&net);
    let mut initial = None;
    let mut last = f64::NAN;
    for epoch in 0..cfg.epochs {
        let (loss, g) = loss_and_gradient(&net, data);
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        initial.get_or_insert(loss);
        last = loss;
        for (v, gi) in p.iter_mut().zip(&g) {
            *v = (*v - cfg.step * gi).clamp(-b, b);
        }
        set_params_flat(&mut net, &p)?;
    }
    if cfg.prune {
        let s = net.arch().sparsity;
        if s < p.len() {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&i, &j| p[j].abs().total_cmp(&p[i].abs()).then(i.cmp(&j)));
            for &i in &order[s..] {
                p[i] = 0.0;
            }
            set_params_flat(&mut net, &p)?;
        }
    }
    let mut diag = Diagnostics::nonlinear();
    diag.hyperparameters
        .insert("epochs".into(), cfg.epochs as f64);
    diag.hyperparameters.insert("step".into(), cfg.step);
    if let Some(l) = initial {
        diag.hyperparameters.insert("initial_loss".into(), l);
        diag.hyperparameters.insert("last_step_loss".into(), last);
    }
    let (raw, _) = loss_and_gradient(&net, data);
    if !raw.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            loss: raw,
        });
    }
    diag.unclipped_empirical_risk = Some(raw);
    let mut est = FittedEstimator::new(
        EstimatorKind::DeepGd,
        data.d,
        Predictor::Network { network: net },
        diag,
    );
    est.diagnostics.empirical_risk = super::empirical_risk(&est, data);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::Dense;

    fn data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (6.0 * x).sin() + 0.1 * rng.random::<f64>())
            .collect();
        Dataset::from_1d(xs, ys).unwrap()
    }

    #[test]
    fn zero_epochs_returns_init() {
        let arch = NetworkArch::new(2, 100, 5, 10.0);
        let d = data(20, 1);
        let cfg = GdConfig {
            epochs: 0,
            step: 0.1,
            seed: 9,
            prune: false,
        };
        let est = erm_deep_gd(&d, &arch, &cfg).unwrap();
        let Predictor::Network { network } = &est.predictor else {
            unreachable!()
        };
        assert_eq!(network, &random_network(&arch, 1, 9).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = data(15, 2);
        for seed in 0..10 {
            let net = random_network(&NetworkArch::new(2, 100, 4, 10.0), 1, seed).unwrap();
            let (_, g) = loss_and_gradient(&net, &d);
            let p = params_flat(&net);
            let h = 1e-6;
            let mut fd = vec![0.0; p.len()];
            for i in 0..p.len() {
                let mut a = net.clone();
                let mut q = p.clone();
                q[i] += h;
                set_params_flat(&mut a, &q).unwrap();
                let up = loss_and_gradient(&a, &d).0;
                q[i] -= 2.0 * h;
                set_params_flat(&mut a, &q).unwrap();
                let down = loss_and_gradient(&a, &d).0;
                fd[i] = (up - down) / (2.0 * h);
            }
            let num: f64 = g
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            assert!(
                num / den <= 1e-4,
                "seed {seed}: relative error {}",
                num / den
            );
        }
    }

    #[test]
    fn single_active_unit_reaches_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 0.5 + 2.0 * x + 0.05 * (rng.random::<f64>() - 0.5))
            .collect();
        let d = Dataset::from_1d(xs.clone(), ys.clone()).unwrap();
        let arch = NetworkArch::new(1, 3, 1, 10.0);
        let init = ReluNetwork::new(
            arch,
            1,
            vec![
                Dense::from_rows(&[vec![1.0]]).unwrap(),
                Dense::from_rows(&[vec![1.0]]).unwrap(),
            ],
            vec![vec![-1.0]],
        )
        .unwrap();
        let est = erm_deep_gd_from(
            &d,
            init,
            &GdConfig {
                epochs: 40_000,
                step: 0.05,
                seed: 0,
                prune: false,
            },
        )
        .unwrap();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        for x in [0.0, 0.5, 1.0] {
            assert!((est.predict(&[x]) - (icpt + slope * x)).abs() < 1e-4);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let d = Dataset::from_1d(vec![0.2, 0.7], vec![1e200, -1e200]).unwrap();
        let arch = NetworkArch::new(1, 3, 1, 1e300);
        let one = || Dense::from_rows(&[vec![1.0]]).unwrap();
        let init = ReluNetwork::new(arch, 1, vec![one(), one()], vec![vec![-1.0]]).unwrap();
        let cfg = GdConfig {
            epochs: 2000,
            step: 10.0,
            seed: 1,
            prune: false,
        };
        let r = erm_deep_gd_from(&d, init, &cfg);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }
}
