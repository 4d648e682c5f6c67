use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Provenance of a dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Noise standard deviation used to generate the outputs.
    pub sigma: f64,
    pub seed: u64,
    /// Identifier of the true regression function.
    pub target_id: String,
}

/// `n` pairs `(X_i, Y_i)` with `X_i ∈ [0, 1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub d: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<f64>, meta: DatasetMeta) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if ys.is_empty() {
            return Err(invalid("a dataset needs at least one point"));
        }
        if xs.len() != d * ys.len() {
            return Err(Error::Dimension {
                expected: d * ys.len(),
                got: xs.len(),
            });
        }
        if let Some(i) = xs.iter().position(|t| !(0.0..=1.0).contains(t)) {
            let row = i / d;
            return Err(Error::Domain {
                point: xs[row * d..(row + 1) * d].to_vec(),
            });
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(invalid("non-finite output"));
        }
        Ok(Self { d, xs, ys, meta })
    }

    /// 1-d convenience constructor.
    pub fn from_1d(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::new(1, xs, ys, DatasetMeta::default())
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    /// Same inputs, different outputs.
    pub fn with_outputs(&self, ys: Vec<f64>) -> Result<Self> {
        Self::new(self.d, self.xs.clone(), ys, self.meta.clone())
    }

    /// Rows selected by `keep`.
    pub fn subset(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..self.n() {
            if keep(i) {
                xs.extend_from_slice(self.x(i));
                ys.push(self.ys[i]);
            }
        }
        Self::new(self.d, xs, ys, self.meta.clone())
    }

    pub fn mean_y(&self) -> f64 {
        self.ys.iter().sum::<f64>() / self.n() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_cube() {
        assert!(Dataset::from_1d(vec![0.5, 1.2], vec![0.0, 0.0]).is_err());
        assert!(Dataset::from_1d(vec![0.5], vec![0.0, 0.0]).is_err());
        let d = Dataset::from_1d(vec![0.5, 0.25], vec![1.0, 3.0]).unwrap();
        assert_eq!(d.mean_y(), 2.0);
        assert_eq!(d.subset(|i| i == 1).unwrap().ys, vec![3.0]);
    }
}
