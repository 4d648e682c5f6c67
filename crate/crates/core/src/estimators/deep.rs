//! Restricted empirical risk minimization over constructed ReLU networks.
//!
//! The architecture and inner weights are fixed by a dictionary of ramp
//! atoms; only the output coefficients are free, so least squares over them
//! is an exact minimizer within the restricted class. The fitted network is
//! clipped at `F`.

use super::dataset::Dataset;
use super::threshold::empirical_coefficients;
use super::{Diagnostics, EstimatorKind, FittedEstimator, Predictor};
use crate::classes::target::{TargetClass, TargetFunction};
use crate::error::{invalid, Error, Result};
use crate::relu_net::{box_sum_network, ramp_spline, step_ramp, ReluNetwork, WeightedBox};
use crate::wavelets::{candidates, indices_up_to, DyadicWavelet, WaveletIndex};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Ridge used when the normal equations are singular.
pub const RIDGE_FALLBACK: f64 = 1e-8;

/// Relative eigenvalue floor below which the design counts as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Which dictionary to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClassHint {
    /// Piecewise constant with at most `jumps` jumps on `[0, 1]`.
    Jumps { jumps: usize, clip: f64 },
    /// Sparse Haar expansions with weak-ℓᵖ coefficients and tail decay `β`.
    Wavelet { p: f64, beta: f64, clip: f64 },
}

impl ClassHint {
    /// Hint read off the class metadata of `f`, with `F` its sup bound.
    pub fn for_target(f: &TargetFunction) -> Result<Self> {
        let clip = f.sup_bound;
        match &f.class {
            TargetClass::Jk { k, .. } => Ok(ClassHint::Jumps { jumps: *k, clip }),
            TargetClass::I0 { n_s, sum } => {
                if sum.dim() != 1 {
                    return Err(invalid("the jump dictionary covers d = 1 only"));
                }
                let knots = sum
                    .atoms
                    .iter()
                    .map(|a| a.phi.factors()[0].knots().len())
                    .max()
                    .unwrap_or(0);
                Ok(ClassHint::Jumps {
                    jumps: n_s * knots,
                    clip,
                })
            }
            TargetClass::Jp { expansion } => {
                let b = expansion
                    .bounds()
                    .ok_or_else(|| invalid("the expansion carries no class bounds"))?;
                Ok(ClassHint::Wavelet {
                    p: b.p,
                    beta: b.beta,
                    clip,
                })
            }
            TargetClass::Kp { sum } => Ok(ClassHint::Wavelet {
                p: sum.bounds.p,
                beta: sum.bounds.beta,
                clip,
            }),
            TargetClass::Custom { .. } => Err(invalid("no dictionary for a custom combination")),
        }
    }
}

/// Overrides for the dictionary size; `None` picks the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeepBudget {
    /// Number `N` of retained wavelet atoms.
    #[serde(default)]
    pub atoms: Option<usize>,
    /// Wavelet atoms have level `< m`.
    #[serde(default)]
    pub max_level: Option<u32>,
    /// Ramp width `w`; defaults to `1/n`.
    #[serde(default)]
    pub ramp_width: Option<f64>,
}

/// A dictionary element.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `Σ o_j ρ(x - t_j)` on `[0, 1]`.
    Spline(Vec<(f64, f64)>),
    /// `Σ coef · ρ(Σ_i u_i(x_i) - (d - 1))` with trapezoids `u_i` of ramp width `w`.
    Boxes { boxes: Vec<WeightedBox>, w: f64 },
}

fn trapezoid(x: f64, lo: f64, hi: f64, w: f64) -> f64 {
    let r = |t: f64| (x - t).max(0.0);
    (r(lo - w) - r(lo) - r(hi - w) + r(hi)) / w
}

impl Atom {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Atom::Spline(knots) => knots.iter().map(|(t, o)| o * (x[0] - t).max(0.0)).sum(),
            Atom::Boxes { boxes, w } => boxes
                .iter()
                .map(|b| {
                    let s: f64 = (0..x.len())
                        .map(|i| trapezoid(x[i], b.lo[i], b.hi[i], *w))
                        .sum();
                    b.coef * (s - (x.len() - 1) as f64).max(0.0)
                })
                .sum(),
        }
    }

    fn knots(&self) -> Vec<(f64, f64)> {
        match self {
            Atom::Spline(k) => k.clone(),
            Atom::Boxes { boxes, w } => boxes
                .iter()
                .flat_map(|b| {
                    let [a0, a1] = step_ramp(b.lo[0], *w);
                    let [b0, b1] = step_ramp(b.hi[0], *w);
                    [
                        (a0.0, b.coef * a0.1),
                        (a1.0, b.coef * a1.1),
                        (b0.0, -b.coef * b0.1),
                        (b1.0, -b.coef * b1.1),
                    ]
                })
                .collect(),
        }
    }

    /// The constant 1 on `[0, 1]^d`.
    pub fn constant(d: usize, w: f64) -> Self {
        if d == 1 {
            Atom::Spline(step_ramp(0.0, w).to_vec())
        } else {
            Atom::Boxes {
                boxes: vec![WeightedBox {
                    coef: 1.0,
                    lo: vec![0.0; d],
                    hi: vec![1.0 + w; d],
                }],
                w,
            }
        }
    }

    /// Ramp version of `1_{[t, 1]}` rising on `[t - w, t]`.
    pub fn step(t: f64, w: f64) -> Self {
        Atom::Spline(step_ramp(t, w).to_vec())
    }

    /// Ramp version of the Haar wavelet `ψ_{k,ℓ}` (tensor product for `d > 1`).
    pub fn haar(idx: &WaveletIndex, w: f64) -> Self {
        let d = idx.dim();
        if d == 1 {
            let s = (-(idx.k[0] as f64)).exp2();
            let t0 = idx.l[0] as f64 * s;
            let scale = (idx.k[0] as f64 * 0.5).exp2();
            let mut knots = Vec::with_capacity(6);
            for (t, c) in [(t0, 1.0), (t0 + 0.5 * s, -2.0), (t0 + s, 1.0)] {
                knots.extend(step_ramp(t, w).iter().map(|(a, o)| (*a, scale * c * o)));
            }
            return Atom::Spline(knots);
        }
        let scale: f64 = idx.k.iter().map(|k| (*k as f64 * 0.5).exp2()).product();
        let mut boxes = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            let mut sign = 1.0;
            for i in 0..d {
                let s = (-(idx.k[i] as f64)).exp2();
                let t0 = idx.l[i] as f64 * s;
                if corner >> i & 1 == 0 {
                    lo.push(t0);
                    hi.push(t0 + 0.5 * s);
                } else {
                    lo.push(t0 + 0.5 * s);
                    hi.push(t0 + s);
                    sign = -sign;
                }
            }
            boxes.push(WeightedBox {
                coef: sign * scale,
                lo,
                hi,
            });
        }
        Atom::Boxes { boxes, w }
    }
}

/// Least-squares coefficients; falls back to a small ridge when the Gram
/// matrix is numerically singular. Returns the coefficients and whether the
/// fallback fired.
fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = design.nrows().max(1) as f64;
    let mut g = design.transpose() * design / n;
    let r = design.transpose() * y / n;
    let eig = SymmetricEigen::new(g.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let singular = !(min > SINGULAR_RATIO * max) || max == 0.0;
    if singular {
        for i in 0..g.nrows() {
            g[(i, i)] += RIDGE_FALLBACK;
        }
    }
    match g.clone().cholesky() {
        Some(c) => (c.solve(&r), singular),
        None => {
            for i in 0..g.nrows() {
                g[(i, i)] += RIDGE_FALLBACK;
            }
            let c = g
                .cholesky()
                .expect("ridge-regularized Gram matrix is positive definite");
            (c.solve(&r), true)
        }
    }
}

/// Exact least squares over `Σ_j c_j atom_j`, realized as a single network
/// clipped at `clip`.
pub fn fit_dictionary(
    data: &Dataset,
    atoms: &[Atom],
    clip: Option<f64>,
) -> Result<FittedEstimator> {
    if atoms.is_empty() {
        return Err(invalid("empty dictionary"));
    }
    let n = data.n();
    let p = atoms.len();
    let mut design = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        let x = data.x(i);
        for (j, a) in atoms.iter().enumerate() {
            design[(i, j)] = a.eval(x);
        }
    }
    let y = DVector::from_column_slice(&data.ys);
    let (coef, ridge) = least_squares(&design, &y);
    let network = assemble(data.d, atoms, coef.as_slice(), clip)?;
    let mut diag = Diagnostics::nonlinear();
    diag.hyperparameters.insert("atoms".into(), p as f64);
    diag.hyperparameters
        .insert("nonzeros".into(), network.nonzeros() as f64);
    if let Some(f) = clip {
        diag.hyperparameters.insert("clip".into(), f);
    }
    if ridge {
        diag.flags.push("ridge_fallback".into());
    }
    diag.extra
        .insert("coefficients".into(), serde_json::json!(coef.as_slice()));
    let raw = (0..n)
        .map(|i| (network.forward_raw(data.x(i)) - data.ys[i]).powi(2))
        .sum::<f64>()
        / n as f64;
    diag.unclipped_empirical_risk = Some(raw);
    let mut est = FittedEstimator::new(
        EstimatorKind::DeepConstructive,
        data.d,
        Predictor::Network { network },
        diag,
    );
    est.diagnostics.empirical_risk = super::empirical_risk(&est, data);
    Ok(est)
}

fn assemble(d: usize, atoms: &[Atom], coef: &[f64], clip: Option<f64>) -> Result<ReluNetwork> {
    if d == 1 {
        let mut knots = Vec::new();
        for (a, c) in atoms.iter().zip(coef) {
            knots.extend(a.knots().into_iter().map(|(t, o)| (t, c * o)));
        }
        return ramp_spline(&knots, clip);
    }
    let mut all = Vec::new();
    let mut width = None;
    for (a, c) in atoms.iter().zip(coef) {
        match a {
            Atom::Boxes { boxes, w } => {
                if width.is_some_and(|v| v != *w) {
                    return Err(Error::Construction(
                        "box atoms must share one ramp width".into(),
                    ));
                }
                width = Some(*w);
                all.extend(boxes.iter().map(|b| WeightedBox {
                    coef: c * b.coef,
                    ..b.clone()
                }));
            }
            Atom::Spline(_) => return Err(Error::Construction("spline atoms need d = 1".into())),
        }
    }
    box_sum_network(&all, d, width.unwrap_or(1.0), clip)
}

/// Exact minimal-SSE partition of the sorted outputs into at most `segments`
/// contiguous blocks. Returns the start index of every block after the first.
fn segment(ys: &[f64], segments: usize) -> Vec<usize> {
    let n = ys.len();
    let segments = segments.clamp(1, n);
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, y) in ys.iter().enumerate() {
        s1[i + 1] = s1[i] + y;
        s2[i + 1] = s2[i] + y * y;
    }
    let cost = |i: usize, j: usize| {
        let s = s1[j] - s1[i];
        (s2[j] - s2[i]) - s * s / (j - i) as f64
    };
    // best[s][j]: first j points split into s + 1 blocks.
    let mut best = vec![vec![f64::INFINITY; n + 1]; segments];
    let mut arg = vec![vec![0usize; n + 1]; segments];
    for j in 1..=n {
        best[0][j] = cost(0, j);
    }
    for s in 1..segments {
        for j in (s + 1)..=n {
            let (mut b, mut a) = (f64::INFINITY, 0);
            for i in s..j {
                let v = best[s - 1][i] + cost(i, j);
                if v < b {
                    b = v;
                    a = i;
                }
            }
            best[s][j] = b;
            arg[s][j] = a;
        }
    }
    // Fewer blocks win ties.
    let mut s_best = 0;
    for s in 1..segments {
        if best[s][n] < best[s_best][n] - 1e-12 * best[s_best][n].abs() {
            s_best = s;
        }
    }
    let mut cuts = Vec::with_capacity(s_best);
    let mut j = n;
    for s in (1..=s_best).rev() {
        j = arg[s][j];
        cuts.push(j);
    }
    cuts.reverse();
    cuts
}

fn jumps_dictionary(data: &Dataset, jumps: usize, w: f64) -> Result<(Vec<Atom>, Vec<f64>)> {
    if data.d != 1 {
        return Err(invalid("the jump dictionary covers d = 1 only"));
    }
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.sort_by(|&a, &b| data.xs[a].total_cmp(&data.xs[b]).then(a.cmp(&b)));
    let xs: Vec<f64> = order.iter().map(|&i| data.xs[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| data.ys[i]).collect();
    let mut atoms = vec![Atom::constant(1, w)];
    let mut locs = Vec::new();
    for c in segment(&ys, jumps + 1) {
        let (a, b) = (xs[c - 1], xs[c]);
        let mid = 0.5 * (a + b);
        let half = mid - a;
        let wj = if half > 0.0 { w.min(half) } else { w };
        atoms.push(Atom::step(mid, wj));
        locs.push(mid);
    }
    Ok((atoms, locs))
}

/// `α = 1/p - 1/2`, `m = ⌈2α/(β(2α+1)) log₂ n⌉ ∨ 1` and `N = ⌈n^{1/(2α+1)}⌉`.
pub fn wavelet_budget(n: usize, p: f64, beta: f64) -> Result<(f64, u32, usize)> {
    if !(p > 0.0 && p < 2.0) || !(beta > 0.0) {
        return Err(invalid(format!(
            "need 0 < p < 2 and beta > 0, got p = {p}, beta = {beta}"
        )));
    }
    let alpha = 1.0 / p - 0.5;
    let nf = n as f64;
    let m = ((2.0 * alpha / (beta * (2.0 * alpha + 1.0))) * nf.log2())
        .ceil()
        .max(1.0) as u32;
    let big_n = nf.powf(1.0 / (2.0 * alpha + 1.0)).ceil() as usize;
    Ok((alpha, m, big_n.max(1)))
}

/// `(1/n) Σ (Y_i - Ȳ) ψ(X_i)` for every index with level `< m`.
fn empirical_haar(data: &Dataset, m: u32) -> Vec<(WaveletIndex, f64)> {
    let d = data.d;
    let wavelet = DyadicWavelet::haar(d);
    if d == 1 {
        let levels = empirical_coefficients(data, &wavelet, m - 1);
        return levels
            .iter()
            .enumerate()
            .flat_map(|(k, row)| {
                row.iter().enumerate().map(move |(l, a)| {
                    (
                        WaveletIndex::d1(k as u32, l as u64).expect("valid index"),
                        *a,
                    )
                })
            })
            .collect();
    }
    let mean = data.mean_y();
    let mut acc: HashMap<WaveletIndex, f64> = HashMap::new();
    let level_vectors: Vec<Vec<u32>> = {
        let mut out = vec![Vec::new()];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|v| (0..m).map(move |k| [v.clone(), vec![k]].concat()))
                .collect();
        }
        out
    };
    for i in 0..data.n() {
        let x = data.x(i);
        let r = data.ys[i] - mean;
        for ks in &level_vectors {
            let mut combos: Vec<Vec<u64>> = vec![Vec::new()];
            for (ax, k) in ks.iter().enumerate() {
                let c: Vec<u64> = candidates(*k, x[ax]).into_iter().flatten().collect();
                combos = combos
                    .into_iter()
                    .flat_map(|v| c.iter().map(move |l| [v.clone(), vec![*l]].concat()))
                    .collect();
            }
            for ls in combos {
                let idx = WaveletIndex {
                    k: ks.clone(),
                    l: ls,
                };
                let v = wavelet.eval_unchecked(&idx, x);
                if v != 0.0 {
                    *acc.entry(idx).or_insert(0.0) += r * v;
                }
            }
        }
    }
    let n = data.n() as f64;
    indices_up_to(d, m - 1)
        .into_iter()
        .map(|idx| {
            let a = acc.get(&idx).copied().unwrap_or(0.0) / n;
            (idx, a)
        })
        .collect()
}

/// Restricted ERM over the dictionary implied by `hint`.
///
/// * Jumps: an exact dynamic program places at most `jumps` breakpoints
///   between sorted inputs; the dictionary is a constant plus one ramp step
///   per breakpoint.
/// * Wavelet: the `N` Haar atoms of level `< m` with the largest empirical
///   coefficients, plus a constant.
///
/// Outer coefficients are then fit by least squares and the network is
/// clipped at the hint's `F`.
pub fn erm_deep_constructive(
    data: &Dataset,
    hint: &ClassHint,
    budget: &DeepBudget,
) -> Result<FittedEstimator> {
    let n = data.n();
    let w = budget.ramp_width.unwrap_or(1.0 / n as f64);
    if !(w > 0.0 && w < 0.5) {
        return Err(invalid(format!("ramp width must lie in (0, 1/2), got {w}")));
    }
    match *hint {
        ClassHint::Jumps { jumps, clip } => {
            let (atoms, locs) = jumps_dictionary(data, jumps, w)?;
            let mut est = fit_dictionary(data, &atoms, Some(clip))?;
            let h = &mut est.diagnostics;
            h.hyperparameters.insert("ramp_width".into(), w);
            h.hyperparameters.insert("jumps".into(), locs.len() as f64);
            h.extra
                .insert("jump_locations".into(), serde_json::json!(locs));
            Ok(est)
        }
        ClassHint::Wavelet { p, beta, clip } => {
            let (alpha, m0, n0) = wavelet_budget(n, p, beta)?;
            let m = budget.max_level.unwrap_or(m0).max(1);
            let big_n = budget.atoms.unwrap_or(n0);
            if m > 20 {
                return Err(invalid(format!("level bound m = {m} is too large")));
            }
            let mut coeffs = empirical_haar(data, m);
            coeffs.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
            coeffs.truncate(big_n);
            let mut atoms = vec![Atom::constant(data.d, w)];
            atoms.extend(coeffs.iter().map(|(idx, _)| Atom::haar(idx, w)));
            let mut est = fit_dictionary(data, &atoms, Some(clip))?;
            let h = &mut est.diagnostics;
            h.hyperparameters.insert("ramp_width".into(), w);
            h.hyperparameters.insert("alpha".into(), alpha);
            h.hyperparameters.insert("m".into(), m as f64);
            h.hyperparameters
                .insert("n_atoms".into(), coeffs.len() as f64);
            h.extra.insert(
                "selected".into(),
                serde_json::json!(coeffs
                    .iter()
                    .map(|(i, _)| serde_json::json!({"k": i.k, "l": i.l}))
                    .collect::<Vec<_>>()),
            );
            Ok(est)
        }
    }
}
