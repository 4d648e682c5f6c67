//! Sparse coefficient sequences and their sparsity functionals.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Position information an index exposes to the tail-compactness check.
pub trait CoeffIndex: Ord + Clone {
    /// 1-based position in the ordinal enumeration, if the index has one.
    fn ordinal(&self) -> Option<u64>;
    /// Dyadic level (`max_i k_i` for wavelet indices), if the index has one.
    fn level(&self) -> Option<u32>;
}

/// Plain 1-based ordinal index of an orthonormal system `(φ_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ordinal(pub u64);

impl CoeffIndex for Ordinal {
    fn ordinal(&self) -> Option<u64> {
        Some(self.0)
    }
    fn level(&self) -> Option<u32> {
        None
    }
}

/// Class bounds a sequence claims to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassBounds {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
}

/// Finitely supported coefficient sequence. Absent indices are zero and no
/// stored coefficient is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "I: Serialize", deserialize = "I: Deserialize<'de> + Ord"))]
pub struct CoeffSeq<I: Ord> {
    #[serde(with = "entries_as_list")]
    entries: BTreeMap<I, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ClassBounds>,
}

mod entries_as_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<I: Serialize + Ord, S: Serializer>(
        m: &BTreeMap<I, f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let v: Vec<(&I, &f64)> = m.iter().collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, I: Deserialize<'de> + Ord, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<I, f64>, D::Error> {
        let v: Vec<(I, f64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().filter(|(_, a)| *a != 0.0).collect())
    }
}

impl<I: Ord> Default for CoeffSeq<I> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            bounds: None,
        }
    }
}

impl<I: Ord + Clone> CoeffSeq<I> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a sequence, summing repeated indices and dropping zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (I, f64)>) -> Self {
        let mut entries = BTreeMap::new();
        for (i, a) in pairs {
            *entries.entry(i).or_insert(0.0) += a;
        }
        entries.retain(|_, a| *a != 0.0);
        Self {
            entries,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: ClassBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    /// Sets a coefficient; setting zero removes the index.
    pub fn set(&mut self, index: I, value: f64) {
        if value == 0.0 {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn get(&self, index: &I) -> f64 {
        self.entries.get(index).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&I, &f64)> {
        self.entries.iter()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.values().copied()
    }

    pub fn energy(&self) -> f64 {
        self.values().map(|a| a * a).sum()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = Self::from_pairs(self.entries.iter().map(|(i, a)| (i.clone(), a * lambda)));
        out.bounds = self.bounds;
        out
    }
}

impl<I: Ord + Clone> FromIterator<(I, f64)> for CoeffSeq<I> {
    fn from_iter<T: IntoIterator<Item = (I, f64)>>(iter: T) -> Self {
        Self::from_pairs(iter)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("p must lie in (0, 2), got {p}")))
    }
}

/// Weak ℓᵖ quasi-norm `sup_i i^{1/p} |a|_(i)` of a list of values.
pub fn weak_lp_norm_values(values: impl IntoIterator<Item = f64>, p: f64) -> Result<f64> {
    check_p(p)?;
    let mut mags: Vec<f64> = values
        .into_iter()
        .map(f64::abs)
        .filter(|a| *a > 0.0)
        .collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let inv_p = 1.0 / p;
    Ok(mags
        .iter()
        .enumerate()
        .map(|(i, a)| ((i + 1) as f64).powf(inv_p) * a)
        .fold(0.0, f64::max))
}

/// Weak ℓᵖ quasi-norm of a coefficient sequence.
pub fn weak_lp_norm<I: Ord + Clone>(a: &CoeffSeq<I>, p: f64) -> Result<f64> {
    weak_lp_norm_values(a.values(), p)
}

/// Ordinary ℓᵖ (quasi-)norm.
pub fn lp_norm<I: Ord + Clone>(a: &CoeffSeq<I>, p: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(invalid(format!("p must be positive, got {p}")));
    }
    Ok(a.values()
        .map(|v| v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p))
}

/// Number of nonzero entries.
pub fn l0_norm<I: Ord + Clone>(a: &CoeffSeq<I>) -> usize {
    a.values().filter(|v| *v != 0.0).count()
}

/// Which tail sums the compactness check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailOrdering {
    /// `Σ_{i>m} a_i² ≤ C₂ m^{-β}` for `m ≥ 1`.
    Ordinal,
    /// `Σ_{level ≥ m} a² ≤ C₂ 2^{-βm}` for `m ≥ 0`, summing every index at
    /// level `m` or finer.
    Dyadic,
}

/// Outcome of [`tail_compactness_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailCheck {
    pub holds: bool,
    pub first_violation: Option<u64>,
}

/// Checks β-minimal tail compactness up to the extent of the support.
pub fn tail_compactness_check<I: CoeffIndex>(
    a: &CoeffSeq<I>,
    c2: f64,
    beta: f64,
    ordering: TailOrdering,
) -> Result<TailCheck> {
    if !(c2 > 0.0) || !(beta > 0.0) {
        return Err(invalid(format!(
            "C2 and beta must be positive (got {c2}, {beta})"
        )));
    }
    // Relative slack so that a sequence sitting exactly on the bound passes.
    let slack = 1.0 + 1e-12;
    let violation = match ordering {
        TailOrdering::Ordinal => {
            let mut pos: Vec<(u64, f64)> = Vec::with_capacity(a.len());
            for (i, v) in a.iter() {
                let o = i
                    .ordinal()
                    .ok_or_else(|| invalid("index has no ordinal position"))?;
                if o == 0 {
                    return Err(invalid("ordinal indices are 1-based"));
                }
                pos.push((o, v * v));
            }
            pos.sort_by_key(|(o, _)| *o);
            // tail(m) is constant for m in [prev, o - 1] where o is the next
            // support point; the bound decreases in m, so search each stretch.
            let mut tail: f64 = pos.iter().map(|(_, e)| e).sum();
            let mut lo = 1u64;
            let mut found = None;
            for (o, e) in &pos {
                if *o > lo {
                    let hi = o - 1;
                    if let Some(m) = first_ordinal_violation(tail, c2, beta, lo, hi, slack) {
                        found = Some(m);
                        break;
                    }
                }
                tail -= e;
                if tail < 0.0 {
                    tail = 0.0;
                }
                lo = lo.max(*o);
            }
            found
        }
        TailOrdering::Dyadic => {
            let mut by_level: BTreeMap<u32, f64> = BTreeMap::new();
            for (i, v) in a.iter() {
                let l = i
                    .level()
                    .ok_or_else(|| invalid("index has no dyadic level"))?;
                *by_level.entry(l).or_insert(0.0) += v * v;
            }
            let max_level = by_level.keys().next_back().copied().unwrap_or(0);
            let mut found = None;
            for m in 0..=max_level {
                let tail: f64 = by_level.range(m..).map(|(_, e)| e).sum();
                let bound = c2 * (-beta * m as f64).exp2();
                if tail > bound * slack {
                    found = Some(m as u64);
                    break;
                }
            }
            found
        }
    };
    Ok(TailCheck {
        holds: violation.is_none(),
        first_violation: violation,
    })
}

fn first_ordinal_violation(
    tail: f64,
    c2: f64,
    beta: f64,
    lo: u64,
    hi: u64,
    slack: f64,
) -> Option<u64> {
    if tail <= 0.0 {
        return None;
    }
    let violates = |m: u64| tail > c2 * (m as f64).powf(-beta) * slack;
    if !violates(hi) {
        return None;
    }
    // Smallest m with tail > C2 m^{-β} is near (C2/tail)^{1/β}; refine around it.
    let guess = (c2 / tail).powf(1.0 / beta).floor();
    let mut m = if guess.is_finite() && guess >= lo as f64 {
        (guess as u64).min(hi)
    } else {
        lo
    };
    while m > lo && violates(m - 1) {
        m -= 1;
    }
    while !violates(m) {
        m += 1;
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(vals: &[f64]) -> CoeffSeq<Ordinal> {
        vals.iter()
            .enumerate()
            .map(|(i, a)| (Ordinal(i as u64 + 1), *a))
            .collect()
    }

    #[test]
    fn weak_norm_small_cases() {
        assert_eq!(weak_lp_norm(&seq(&[]), 1.0).unwrap(), 0.0);
        assert_eq!(weak_lp_norm(&seq(&[0.0, 0.0]), 1.0).unwrap(), 0.0);
        assert_eq!(weak_lp_norm(&seq(&[3.0, 1.0, 2.0]), 1.0).unwrap(), 4.0);
        let p = 0.7;
        let v: Vec<f64> = (1..=50).map(|i| (i as f64).powf(-1.0 / p)).collect();
        assert!((weak_lp_norm(&seq(&v), p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_norm_rejects_bad_p() {
        assert!(weak_lp_norm(&seq(&[1.0]), 0.0).is_err());
        assert!(weak_lp_norm(&seq(&[1.0]), 2.0).is_err());
    }

    #[test]
    fn l0_counts_nonzeros() {
        assert_eq!(l0_norm(&seq(&[0.0, 2.0, 0.0, -1.0])), 2);
        assert_eq!(l0_norm(&seq(&[0.0, 0.0])), 0);
    }

    #[test]
    fn tail_single_coefficient_holds() {
        let c2: f64 = 0.3;
        let a = seq(&[c2.sqrt()]);
        let r = tail_compactness_check(&a, c2, 1.0, TailOrdering::Ordinal).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn tail_constructed_violation_at_one() {
        let c2: f64 = 0.5;
        let beta = 1.3;
        let a: CoeffSeq<Ordinal> = [(Ordinal(2), (2.0 * c2).sqrt())].into_iter().collect();
        let r = tail_compactness_check(&a, c2, beta, TailOrdering::Ordinal).unwrap();
        assert_eq!(
            r,
            TailCheck {
                holds: false,
                first_violation: Some(1)
            }
        );
    }

    #[test]
    fn tail_violation_found_inside_gap() {
        // a_100 = 1, C2 = 10, beta = 1: tail(m) = 1 for m < 100, violated once 10/m < 1.
        let a: CoeffSeq<Ordinal> = [(Ordinal(100), 1.0)].into_iter().collect();
        let r = tail_compactness_check(&a, 10.0, 1.0, TailOrdering::Ordinal).unwrap();
        assert_eq!(r.first_violation, Some(11));
    }

    #[test]
    fn tail_rejects_bad_constants() {
        let a = seq(&[1.0]);
        assert!(tail_compactness_check(&a, 0.0, 1.0, TailOrdering::Ordinal).is_err());
        assert!(tail_compactness_check(&a, 1.0, -1.0, TailOrdering::Ordinal).is_err());
    }

    #[test]
    fn duplicates_merge_and_zeros_vanish() {
        let a: CoeffSeq<Ordinal> = [(Ordinal(1), 1.0), (Ordinal(1), -1.0), (Ordinal(2), 2.0)]
            .into_iter()
            .collect();
        assert_eq!(a.len(), 1);
        assert_eq!(a.get(&Ordinal(2)), 2.0);
    }
}
