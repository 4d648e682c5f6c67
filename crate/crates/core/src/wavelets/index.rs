use crate::classes::coeff::CoeffIndex;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Dyadic index `(k, ℓ)` with one scale and one shift per coordinate.
///
/// Indices are totally ordered coarse-to-fine: first by `max_i k_i`, then
/// lexicographically by `k`, then by `ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawIndex")]
pub struct WaveletIndex {
    pub k: Vec<u32>,
    pub l: Vec<u64>,
}

#[derive(Deserialize)]
struct RawIndex {
    k: Vec<u32>,
    l: Vec<u64>,
}

impl TryFrom<RawIndex> for WaveletIndex {
    type Error = Error;
    fn try_from(r: RawIndex) -> Result<Self> {
        WaveletIndex::new(r.k, r.l)
    }
}

impl WaveletIndex {
    pub fn new(k: Vec<u32>, l: Vec<u64>) -> Result<Self> {
        if k.is_empty() || k.len() != l.len() {
            return Err(Error::InvalidIndex(format!(
                "k {k:?} and l {l:?} must be nonempty and equally long"
            )));
        }
        for (ki, li) in k.iter().zip(&l) {
            if *ki > 62 || *li >= (1u64 << ki) {
                return Err(Error::InvalidIndex(format!(
                    "need 0 <= l < 2^k, got k = {ki}, l = {li}"
                )));
            }
        }
        Ok(Self { k, l })
    }

    /// 1-d shorthand.
    pub fn d1(k: u32, l: u64) -> Result<Self> {
        Self::new(vec![k], vec![l])
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn max_level(&self) -> u32 {
        self.k.iter().copied().max().unwrap_or(0)
    }

    /// Support box `Π [ℓ_i 2^{-k_i}, (ℓ_i + 1) 2^{-k_i}]`.
    pub fn support(&self) -> Vec<(f64, f64)> {
        self.k
            .iter()
            .zip(&self.l)
            .map(|(k, l)| super::mother::support(*k, *l))
            .collect()
    }
}

impl Ord for WaveletIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.max_level()
            .cmp(&other.max_level())
            .then_with(|| self.k.cmp(&other.k))
            .then_with(|| self.l.cmp(&other.l))
    }
}

impl PartialOrd for WaveletIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl CoeffIndex for WaveletIndex {
    /// Position `2^k + ℓ` in the 1-d coarse-to-fine enumeration; undefined for `d > 1`.
    fn ordinal(&self) -> Option<u64> {
        if self.dim() == 1 {
            Some((1u64 << self.k[0]) + self.l[0])
        } else {
            None
        }
    }

    fn level(&self) -> Option<u32> {
        Some(self.max_level())
    }
}

/// Every index in dimension `d` with `max_i k_i ≤ max_level`, in coarse-to-fine order.
pub fn indices_up_to(d: usize, max_level: u32) -> Vec<WaveletIndex> {
    let mut out = Vec::new();
    let mut ks: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        ks = ks
            .into_iter()
            .flat_map(|prefix| {
                (0..=max_level).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    for k in ks {
        let counts: Vec<u64> = k.iter().map(|ki| 1u64 << ki).collect();
        let total: u64 = counts.iter().product();
        for lin in 0..total {
            let mut rem = lin;
            let l: Vec<u64> = counts
                .iter()
                .map(|c| {
                    let v = rem % c;
                    rem /= c;
                    v
                })
                .collect();
            out.push(WaveletIndex { k: k.clone(), l });
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_shift() {
        assert!(WaveletIndex::d1(2, 4).is_err());
        assert!(WaveletIndex::d1(2, 3).is_ok());
        assert!(WaveletIndex::new(vec![1, 2], vec![0]).is_err());
    }

    #[test]
    fn one_dimensional_order_is_ordinal() {
        let idx = indices_up_to(1, 3);
        assert_eq!(idx.len(), 15);
        for (pos, i) in idx.iter().enumerate() {
            assert_eq!(i.ordinal(), Some(pos as u64 + 1));
        }
    }

    #[test]
    fn multi_dimensional_order_groups_by_max_level() {
        let idx = indices_up_to(2, 2);
        assert_eq!(idx.len(), 7 * 7);
        for w in idx.windows(2) {
            assert!(w[0].max_level() <= w[1].max_level());
        }
    }
}
