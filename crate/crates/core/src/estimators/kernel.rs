use serde::{Deserialize, Serialize};

/// Positive semidefinite kernels on `[0, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-‖x - y‖² / ℓ²)`.
    Gaussian { lengthscale: f64 },
    /// `exp(-‖x - y‖₁ / ℓ)`; in `d = 1` this is the exponential kernel.
    Laplace { lengthscale: f64 },
    /// `value` everywhere.
    Constant { value: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { lengthscale } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (lengthscale * lengthscale)).exp()
            }
            Kernel::Laplace { lengthscale } => {
                let d1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-d1 / lengthscale).exp()
            }
            Kernel::Constant { value } => value,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Laplace { .. } => "laplace",
            Kernel::Constant { .. } => "constant",
        }
    }

    /// Whether the kernel has a kink along `x_i = y_i`.
    pub fn kinked(&self) -> bool {
        matches!(self, Kernel::Laplace { .. })
    }
}
