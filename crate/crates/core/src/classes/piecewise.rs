//! Piecewise-constant functions `a0 + Σ a_i 1_{[t_i, 1]}` on `[0, 1]`.

use crate::error::{invalid, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

/// A step function with finitely many upward-closed jumps.
///
/// Jump locations are kept strictly increasing; constructing from a list with
/// repeated locations sums their heights, and zero heights are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPiecewise")]
pub struct PiecewiseConstantFn {
    pub a0: f64,
    jumps: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct RawPiecewise {
    a0: f64,
    jumps: Vec<(f64, f64)>,
}

impl From<RawPiecewise> for PiecewiseConstantFn {
    fn from(r: RawPiecewise) -> Self {
        PiecewiseConstantFn::new(r.a0, r.jumps)
    }
}

impl PiecewiseConstantFn {
    pub fn new(a0: f64, jumps: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut js: Vec<(f64, f64)> = jumps.into_iter().collect();
        js.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(js.len());
        for (t, a) in js {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += a,
                _ => merged.push((t, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        Self { a0, jumps: merged }
    }

    pub fn constant(a0: f64) -> Self {
        Self {
            a0,
            jumps: Vec::new(),
        }
    }

    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a0
            + self
                .jumps
                .iter()
                .take_while(|(t, _)| *t <= x)
                .map(|(_, a)| a)
                .sum::<f64>()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.jumps.iter().map(|(t, _)| *t).collect()
    }

    /// Sup-norm of the function on `[0, 1]`.
    pub fn sup_abs(&self) -> f64 {
        let mut v = self.a0;
        let mut best = v.abs();
        for (_, a) in &self.jumps {
            v += a;
            best = best.max(v.abs());
        }
        best
    }

    /// Checks membership in `J_k(C)`.
    pub fn validate(&self, k: usize, c: f64) -> Result<()> {
        let tol = 1e-12 * (1.0 + c.abs());
        if self.jumps.len() > k {
            return Err(invalid(format!(
                "{} jumps exceed k = {k}",
                self.jumps.len()
            )));
        }
        if let Some((t, _)) = self.jumps.iter().find(|(t, _)| !(*t > 0.0 && *t <= 1.0)) {
            return Err(invalid(format!("jump location {t} outside (0, 1]")));
        }
        if self.a0.abs() > c + tol {
            return Err(invalid(format!("|a0| = {} exceeds C = {c}", self.a0.abs())));
        }
        let tv = total_variation(self);
        if tv > c + tol {
            return Err(invalid(format!("total jump mass {tv} exceeds C = {c}")));
        }
        Ok(())
    }
}

/// Total variation on `[0, 1]`, which for this representation is `Σ|a_i|`.
pub fn total_variation(f: &PiecewiseConstantFn) -> f64 {
    f.jumps.iter().map(|(_, a)| a.abs()).sum()
}

/// Draws an element of `J_k(C)` with exactly `k` jumps (almost surely).
///
/// `a0 ~ U[-C, C]`, jump locations uniform on `(0, 1]`, and jump heights are a
/// uniform point of the simplex scaled to total mass `C` with random signs.
pub fn sample_piecewise<R: Rng + ?Sized>(
    k: usize,
    c: f64,
    rng: &mut R,
) -> Result<PiecewiseConstantFn> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(c > 0.0) {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    let a0 = rng.random_range(-c..=c);
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    let jumps: Vec<(f64, f64)> = e
        .iter()
        .map(|ei| {
            let t = 1.0 - rng.random::<f64>();
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (t, sign * c * ei / total)
        })
        .collect();
    Ok(PiecewiseConstantFn::new(a0, jumps))
}
