//! Kernel ridge regression `f̂(x) = k(x, X)(K + λI)^{-1} Y`.
//!
//! With the 1-d exponential kernel `exp(-|x - y|/ℓ)` the Gram matrix is the
//! covariance of a stationary Ornstein–Uhlenbeck process, so `(K + λI)^{-1} b`
//! comes out of a Kalman filter and Rauch–Tung–Striebel smoother in `O(n)`
//! time. Every other kernel goes through a dense Cholesky factorization.

use super::dataset::Dataset;
use super::kernel::Kernel;
use super::{Diagnostics, EstimatorKind, FittedEstimator, Predictor};
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Condition-number estimate above which the dense solve is refused.
pub const MAX_CONDITION: f64 = 1e14;

/// `λ` grid `10^{-4}, 10^{-3.75}, …, 10^3` used by [`kernel_ridge_cv`] by default.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=28)
        .map(|i| 10f64.powf(-4.0 + 0.25 * i as f64))
        .collect()
}

/// Sorted inputs and transition factors of the OU state-space model.
#[derive(Debug, Clone)]
struct ExpSystem {
    lambda: f64,
    order: Vec<usize>,
    xs: Vec<f64>,
    /// `exp(-(x_{i+1} - x_i)/ℓ)` in sorted order.
    phi: Vec<f64>,
}

impl ExpSystem {
    fn new(xs: &[f64], ell: f64, lambda: f64) -> Self {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        let phi = sorted
            .windows(2)
            .map(|w| (-(w[1] - w[0]) / ell).exp())
            .collect();
        Self {
            lambda,
            order,
            xs: sorted,
            phi,
        }
    }

    /// `(K + λI)^{-1} b` in the caller's ordering.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.xs.len();
        let lam = self.lambda;
        let bs: Vec<f64> = self.order.iter().map(|&i| b[i]).collect();
        let mut mp = vec![0.0; n];
        let mut pp = vec![0.0; n];
        let mut m = vec![0.0; n];
        let mut p = vec![0.0; n];
        pp[0] = 1.0;
        for i in 0..n {
            if i > 0 {
                let f = self.phi[i - 1];
                mp[i] = f * m[i - 1];
                pp[i] = f * f * p[i - 1] + (1.0 - f * f);
            }
            let s = pp[i] + lam;
            let k = pp[i] / s;
            m[i] = mp[i] + k * (bs[i] - mp[i]);
            p[i] = pp[i] * lam / s;
        }
        let mut ms = m.clone();
        for i in (0..n.saturating_sub(1)).rev() {
            let g = p[i] * self.phi[i] / pp[i + 1];
            ms[i] = m[i] + g * (ms[i + 1] - mp[i + 1]);
        }
        let mut out = vec![0.0; n];
        for (j, &i) in self.order.iter().enumerate() {
            out[i] = (bs[j] - ms[j]) / lam;
        }
        out
    }
}

/// `Σ α_j exp(-|x - x_j|/ℓ)` evaluated in `O(log n)` through prefix recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpKernelSum {
    ell: f64,
    xs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl ExpKernelSum {
    pub fn new(xs: &[f64], alpha: &[f64], ell: f64) -> Self {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
        let sx: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        let sa: Vec<f64> = order.iter().map(|&i| alpha[i]).collect();
        let n = sx.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for i in 0..n {
            left[i] = sa[i]
                + if i > 0 {
                    (-(sx[i] - sx[i - 1]) / ell).exp() * left[i - 1]
                } else {
                    0.0
                };
        }
        for i in (0..n).rev() {
            right[i] = sa[i]
                + if i + 1 < n {
                    (-(sx[i + 1] - sx[i]) / ell).exp() * right[i + 1]
                } else {
                    0.0
                };
        }
        Self {
            ell,
            xs: sx,
            left,
            right,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = self.xs.partition_point(|t| *t <= x);
        let mut v = 0.0;
        if p > 0 {
            v += (-(x - self.xs[p - 1]) / self.ell).exp() * self.left[p - 1];
        }
        if p < self.xs.len() {
            v += (-(self.xs[p] - x) / self.ell).exp() * self.right[p];
        }
        v
    }
}

/// Dual representation `x ↦ Σ α_i k(x, X_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawKernelPredictor", into = "RawKernelPredictor")]
pub struct KernelPredictor {
    pub kernel: Kernel,
    pub lambda: f64,
    pub d: usize,
    pub xs: Vec<f64>,
    pub dual: Vec<f64>,
    fast: Option<ExpKernelSum>,
}

#[derive(Serialize, Deserialize)]
struct RawKernelPredictor {
    kernel: Kernel,
    lambda: f64,
    d: usize,
    xs: Vec<f64>,
    dual: Vec<f64>,
}

impl From<RawKernelPredictor> for KernelPredictor {
    fn from(r: RawKernelPredictor) -> Self {
        KernelPredictor::new(r.kernel, r.lambda, r.d, r.xs, r.dual)
    }
}

impl From<KernelPredictor> for RawKernelPredictor {
    fn from(k: KernelPredictor) -> Self {
        RawKernelPredictor {
            kernel: k.kernel,
            lambda: k.lambda,
            d: k.d,
            xs: k.xs,
            dual: k.dual,
        }
    }
}

impl KernelPredictor {
    pub fn new(kernel: Kernel, lambda: f64, d: usize, xs: Vec<f64>, dual: Vec<f64>) -> Self {
        let fast = match kernel {
            Kernel::Laplace { lengthscale } if d == 1 => {
                Some(ExpKernelSum::new(&xs, &dual, lengthscale))
            }
            _ => None,
        };
        Self {
            kernel,
            lambda,
            d,
            xs,
            dual,
            fast,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if let Some(f) = &self.fast {
            return f.eval(x[0]);
        }
        self.xs
            .chunks(self.d)
            .zip(&self.dual)
            .map(|(xi, a)| a * self.kernel.eval(x, xi))
            .sum()
    }

    /// Points where the predictor has kinks (`d = 1` Laplace kernel only).
    pub fn kinks(&self) -> Vec<f64> {
        if self.kernel.kinked() && self.d == 1 {
            self.xs.clone()
        } else {
            Vec::new()
        }
    }
}

enum Solver {
    Exp(ExpSystem),
    Dense(nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>),
}

impl Solver {
    fn build(data: &Dataset, kernel: Kernel, lambda: f64) -> Result<Self> {
        if let (Kernel::Laplace { lengthscale }, 1) = (kernel, data.d) {
            return Ok(Solver::Exp(ExpSystem::new(&data.xs, lengthscale, lambda)));
        }
        let n = data.n();
        let mut k = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval(data.x(i), data.x(j));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        // Gershgorin bound on the largest eigenvalue over λ, the smallest.
        let row_max = (0..n)
            .map(|i| k.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let condition = (row_max + lambda) / lambda;
        for i in 0..n {
            k[(i, i)] += lambda;
        }
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        let chol = k.cholesky().ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
        })?;
        Ok(Solver::Dense(chol))
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Solver::Exp(s) => s.solve(b),
            Solver::Dense(c) => c.solve(&DVector::from_column_slice(b)).as_slice().to_vec(),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Kernel ridge regression with a fixed `λ`.
pub fn kernel_ridge(data: &Dataset, kernel: Kernel, lambda: f64) -> Result<FittedEstimator> {
    check_lambda(lambda)?;
    let solver = Solver::build(data, kernel, lambda)?;
    let dual = solver.solve(&data.ys);
    let pred = KernelPredictor::new(kernel, lambda, data.d, data.xs.clone(), dual);
    let mut diag = Diagnostics::linear("f(x) = k(x, X) (K + lambda I)^-1 Y");
    diag.hyperparameters.insert("lambda".into(), lambda);
    match kernel {
        Kernel::Gaussian { lengthscale } | Kernel::Laplace { lengthscale } => {
            diag.hyperparameters
                .insert("lengthscale".into(), lengthscale);
        }
        Kernel::Constant { value } => {
            diag.hyperparameters.insert("kernel_value".into(), value);
        }
    }
    let mut est = FittedEstimator::new(EstimatorKind::Krr, data.d, Predictor::Kernel(pred), diag);
    est.diagnostics.empirical_risk = super::empirical_risk(&est, data);
    Ok(est)
}

/// Weights `φ(x; Xⁿ) = (K + λI)^{-1} k(X, x)` so that `f̂(x) = Σ Y_i φ_i(x)`.
pub fn krr_weights(data: &Dataset, kernel: Kernel, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let solver = Solver::build(data, kernel, lambda)?;
    let kx: Vec<f64> = (0..data.n()).map(|i| kernel.eval(x, data.x(i))).collect();
    Ok(solver.solve(&kx))
}

/// Kernel ridge regression with `λ` picked by `folds`-fold cross-validation
/// over `grid`; fold of point `i` is `i mod folds`. Ties go to the smaller `λ`.
pub fn kernel_ridge_cv(
    data: &Dataset,
    kernel: Kernel,
    grid: &[f64],
    folds: usize,
) -> Result<FittedEstimator> {
    if grid.is_empty() {
        return Err(invalid("empty lambda grid"));
    }
    let folds = folds.clamp(2, data.n().max(2));
    if data.n() < folds {
        return kernel_ridge(data, kernel, grid[0]);
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &lambda in grid {
        check_lambda(lambda)?;
        let mut sse = 0.0;
        for f in 0..folds {
            let train = data.subset(|i| i % folds != f)?;
            let test = data.subset(|i| i % folds == f)?;
            let fit = kernel_ridge(&train, kernel, lambda)?;
            sse += (0..test.n())
                .map(|i| (fit.predict(test.x(i)) - test.ys[i]).powi(2))
                .sum::<f64>();
        }
        curve.push((lambda, sse / data.n() as f64));
    }
    let (best, best_err) = curve
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |acc, (l, e)| {
            if e < acc.1 {
                (l, e)
            } else {
                acc
            }
        });
    let mut est = kernel_ridge(data, kernel, best)?;
    est.diagnostics
        .hyperparameters
        .insert("cv_error".into(), best_err);
    est.diagnostics
        .hyperparameters
        .insert("cv_folds".into(), folds as f64);
    est.diagnostics
        .extra
        .insert("cv_curve".into(), serde_json::json!(curve));
    Ok(est)
}
