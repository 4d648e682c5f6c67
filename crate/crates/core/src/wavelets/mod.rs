//! Dyadic wavelet systems on `[0, 1]^d`.
//!
//! A [`DyadicWavelet`] fixes one mother per coordinate; the family is
//! `ψ_{k,ℓ}(x) = Π_i 2^{k_i/2} ψ^{(i)}(2^{k_i} x_i - ℓ_i)` with every mother
//! zero-extended outside `[0, 1]`. Haar is the default mother.

mod expansion;
mod index;
mod mother;

pub(crate) use expansion::candidates;
pub use expansion::{
    analyze, sample_jp, sample_jp_counted, sample_kp, synthesize, top_n_truncate, AffineWaveletSum,
    AffineWaveletTerm, KpBounds, Truncation, WaveletExpansion, ANALYSIS_ZERO_TOL,
    JP_REJECTION_BUDGET,
};
pub use index::{indices_up_to, WaveletIndex};
pub use mother::{
    mother, orthonormality_defect, register_mother, Haar, Mother, REGISTRATION_LEVEL,
};

use crate::error::{invalid, Error, Result};
use crate::quad;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::sync::Arc;

/// Tensor-product dyadic wavelet system.
#[derive(Debug, Clone)]
pub struct DyadicWavelet {
    mothers: Vec<Arc<dyn Mother>>,
}

impl PartialEq for DyadicWavelet {
    fn eq(&self, other: &Self) -> bool {
        self.ids() == other.ids()
    }
}

impl Serialize for DyadicWavelet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.ids().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicWavelet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let ids: Vec<String> = Vec::deserialize(d)?;
        DyadicWavelet::from_ids(&ids).map_err(serde::de::Error::custom)
    }
}

impl DyadicWavelet {
    /// Haar in every coordinate.
    pub fn haar(d: usize) -> Self {
        Self {
            mothers: (0..d.max(1))
                .map(|_| Arc::new(Haar) as Arc<dyn Mother>)
                .collect(),
        }
    }

    pub fn new(mothers: Vec<Arc<dyn Mother>>) -> Result<Self> {
        if mothers.is_empty() {
            return Err(invalid("a wavelet system needs at least one mother"));
        }
        Ok(Self { mothers })
    }

    pub fn from_ids(ids: &[String]) -> Result<Self> {
        let mothers = ids
            .iter()
            .map(|id| mother(id).ok_or_else(|| invalid(format!("unknown mother wavelet '{id}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mothers)
    }

    pub fn ids(&self) -> Vec<String> {
        self.mothers.iter().map(|m| m.id().to_string()).collect()
    }

    pub fn dim(&self) -> usize {
        self.mothers.len()
    }

    pub fn mothers(&self) -> &[Arc<dyn Mother>] {
        &self.mothers
    }

    pub fn piecewise_polynomial(&self) -> bool {
        self.mothers.iter().all(|m| m.piecewise_polynomial())
    }

    pub(crate) fn check_index(&self, idx: &WaveletIndex) -> Result<()> {
        if idx.dim() != self.dim() {
            return Err(Error::InvalidIndex(format!(
                "index of dimension {} for a {}-dimensional system",
                idx.dim(),
                self.dim()
            )));
        }
        for (k, l) in idx.k.iter().zip(&idx.l) {
            if *k > 62 || *l >= (1u64 << k) {
                return Err(Error::InvalidIndex(format!(
                    "need 0 <= l < 2^k, got k = {k}, l = {l}"
                )));
            }
        }
        Ok(())
    }

    /// `ψ_{k,ℓ}(x)` without index validation.
    pub(crate) fn eval_unchecked(&self, idx: &WaveletIndex, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (i, m) in self.mothers.iter().enumerate() {
            v *= mother::scaled(m.as_ref(), idx.k[i], idx.l[i], x[i]);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// 1-d integral `∫_0^1 ψ^{(axis)}_{k,ℓ} ψ^{(axis)}_{k',ℓ'}`.
    pub fn inner_axis(&self, axis: usize, k: u32, l: u64, k2: u32, l2: u64) -> Result<f64> {
        mother::inner_1d(self.mothers[axis].as_ref(), k, l, k2, l2)
    }

    /// Knots of `ψ^{(axis)}_{k,ℓ}` mapped into `[0, 1]`.
    pub fn axis_knots(&self, axis: usize, k: u32, l: u64) -> Vec<f64> {
        mother::mapped_knots(self.mothers[axis].as_ref(), k, l)
    }
}

/// Evaluates `ψ_{k,ℓ}(x)`, zero outside the unit cube coordinate-wise.
pub fn eval_dyadic(w: &DyadicWavelet, idx: &WaveletIndex, x: &[f64]) -> Result<f64> {
    w.check_index(idx)?;
    if x.len() != w.dim() {
        return Err(Error::Dimension {
            expected: w.dim(),
            got: x.len(),
        });
    }
    Ok(w.eval_unchecked(idx, x))
}

/// Gram matrix of all indices with `max_i k_i ≤ level`, computed as products
/// of exact 1-d piecewise integrals. Returned row-major with the index list.
pub fn gram_matrix(w: &DyadicWavelet, level: u32) -> Result<(Vec<WaveletIndex>, Vec<f64>)> {
    let idx = indices_up_to(w.dim(), level);
    let n = idx.len();
    // Cache the 1-d integrals per axis.
    let per_axis: Vec<Vec<Vec<f64>>> = (0..w.dim())
        .map(|axis| {
            let one_d: Vec<(u32, u64)> = (0..=level)
                .flat_map(|k| (0..1u64 << k).map(move |l| (k, l)))
                .collect();
            one_d
                .iter()
                .map(|&(k, l)| {
                    one_d
                        .iter()
                        .map(|&(k2, l2)| w.inner_axis(axis, k, l, k2, l2))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let pos = |k: u32, l: u64| ((1u64 << k) - 1 + l) as usize;
    let mut g = vec![0.0; n * n];
    for (i, a) in idx.iter().enumerate() {
        for (j, b) in idx.iter().enumerate() {
            g[i * n + j] = (0..w.dim())
                .map(|ax| per_axis[ax][pos(a.k[ax], a.l[ax])][pos(b.k[ax], b.l[ax])])
                .product();
        }
    }
    Ok((idx, g))
}

/// `∫ ψ_{k,ℓ}(x)² dx` by quadrature; used to sanity check registered mothers.
pub fn norm_sq(w: &DyadicWavelet, idx: &WaveletIndex) -> Result<f64> {
    w.check_index(idx)?;
    let mut v = 1.0;
    for ax in 0..w.dim() {
        let (lo, hi) = mother::support(idx.k[ax], idx.l[ax]);
        let m = w.mothers[ax].as_ref();
        let knots = w.axis_knots(ax, idx.k[ax], idx.l[ax]);
        v *= quad::integrate_pieces(
            |t| mother::scaled(m, idx.k[ax], idx.l[ax], t).powi(2),
            lo,
            hi,
            &knots,
        );
    }
    Ok(v)
}
