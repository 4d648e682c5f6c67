//! One-dimensional Gauss–Legendre quadrature.
//!
//! Everything here integrates over `[a, b]` split at caller-supplied
//! breakpoints. Between breakpoints the integrand is assumed smooth (for the
//! piecewise-polynomial functions used throughout the crate it is a
//! polynomial, so a fixed rule of sufficient order is exact).

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Nodes and weights of an n-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Chebyshev-like initial guess, refined by Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 10-point rule, exact for polynomials of degree ≤ 19.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(10))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// Sorted, deduplicated breakpoints clamped to `[a, b]`, including both ends.
pub fn partition(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|t| t.is_finite() && *t > a && *t < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    pts
}

/// Integral of `f` over `[a, b]`, applying the standard rule on every piece
/// between consecutive breakpoints.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
) -> f64 {
    let rule = GaussLegendre::standard();
    let pts = partition(a, b, breakpoints);
    pts.windows(2)
        .map(|w| rule.integrate(&mut f, w[0], w[1]))
        .sum()
}

/// Like [`integrate_pieces`] but every piece is further split into `per_piece`
/// equal sub-intervals.
pub fn integrate_pieces_refined<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    per_piece: usize,
) -> f64 {
    let rule = GaussLegendre::standard();
    let pts = partition(a, b, breakpoints);
    let per = per_piece.max(1);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / per as f64;
        for j in 0..per {
            let lo = w[0] + j as f64 * h;
            acc += rule.integrate(&mut f, lo, lo + h);
        }
    }
    acc
}

/// Composite rule on `intervals` uniform cells merged with `breakpoints`.
pub fn integrate_uniform<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    intervals: usize,
    breakpoints: &[f64],
) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut pts: Vec<f64> = (1..intervals).map(|i| a + i as f64 * h).collect();
    pts.extend_from_slice(breakpoints);
    integrate_pieces(f, a, b, &pts)
}

/// Adaptive bisection driven by the difference between one application of
/// the rule and two half-interval applications.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    let rule = GaussLegendre::standard();
    let pts = partition(a, b, breakpoints);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let piece_tol = tol * (w[1] - w[0]) / (b - a).max(f64::MIN_POSITIVE);
        total += adapt(rule, &mut f, w[0], w[1], piece_tol.max(1e-15), 0)?;
    }
    Ok(total)
}

fn adapt<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let whole = rule.integrate(&mut *f, a, b);
    let mid = 0.5 * (a + b);
    let left = rule.integrate(&mut *f, a, mid);
    let right = rule.integrate(&mut *f, mid, b);
    let halves = left + right;
    if (whole - halves).abs() <= tol || (b - a) < 1e-14 {
        return Ok(halves);
    }
    if depth >= 40 {
        return Err(Error::Quadrature(format!("[{a}, {b}]")));
    }
    Ok(adapt(rule, f, a, mid, 0.5 * tol, depth + 1)?
        + adapt(rule, f, mid, b, 0.5 * tol, depth + 1)?)
}

/// Tensor-product rule over the box `Π [lo_i, hi_i]`, splitting axis `i` at
/// `breaks[i]`. Exact for integrands that are polynomial on every cell.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    breaks: &[Vec<f64>],
) -> f64 {
    let d = lo.len();
    let rule = GaussLegendre::standard();
    let cuts: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            partition(
                lo[i],
                hi[i],
                breaks.get(i).map_or(&[][..], |b| b.as_slice()),
            )
        })
        .collect();
    // Per-axis (node, weight) lists over all cells.
    let axes: Vec<Vec<(f64, f64)>> = cuts
        .iter()
        .map(|c| {
            c.windows(2)
                .flat_map(|w| {
                    let half = 0.5 * (w[1] - w[0]);
                    let mid = 0.5 * (w[0] + w[1]);
                    rule.nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(move |(x, wt)| (mid + half * x, wt * half))
                })
                .collect()
        })
        .collect();
    let mut x = vec![0.0; d];
    let mut pos = vec![0usize; d];
    if axes.iter().any(|a| a.is_empty()) {
        return 0.0;
    }
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..d {
            let (xi, wi) = axes[i][pos[i]];
            x[i] = xi;
            w *= wi;
        }
        acc += w * f(&x);
        let mut i = 0;
        loop {
            pos[i] += 1;
            if pos[i] < axes[i].len() {
                break;
            }
            pos[i] = 0;
            i += 1;
            if i == d {
                return acc;
            }
        }
    }
}

/// Nested adaptive integration over a box: each axis is integrated
/// adaptively with the remaining axes as the integrand.
pub fn integrate_box_adaptive<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    breaks: &[Vec<f64>],
    tol: f64,
) -> Result<f64> {
    let mut x = lo.to_vec();
    nested(&mut f, &mut x, 0, lo, hi, breaks, tol)
}

fn nested<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x: &mut [f64],
    axis: usize,
    lo: &[f64],
    hi: &[f64],
    breaks: &[Vec<f64>],
    tol: f64,
) -> Result<f64> {
    let d = lo.len();
    let br = breaks.get(axis).map_or(&[][..], |b| b.as_slice());
    let mut err: Option<Error> = None;
    let v = integrate_adaptive(
        |t| {
            if err.is_some() {
                return 0.0;
            }
            x[axis] = t;
            if axis + 1 == d {
                f(x)
            } else {
                let mut inner = x.to_vec();
                match nested(f, &mut inner, axis + 1, lo, hi, breaks, tol) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            }
        },
        lo[axis],
        hi[axis],
        br,
        tol,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}
