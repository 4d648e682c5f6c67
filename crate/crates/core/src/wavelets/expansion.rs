use super::mother;
use super::{indices_up_to, DyadicWavelet, WaveletIndex};
use crate::classes::affine::{sample_affine_map, AffineMap};
use crate::classes::coeff::{
    tail_compactness_check, weak_lp_norm, ClassBounds, CoeffSeq, TailOrdering,
};
use crate::classes::target::TargetFunction;
use crate::error::{invalid, Error, Result};
use crate::quad;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;

/// Coefficients with `|a| ≤` this are dropped by [`analyze`].
pub const ANALYSIS_ZERO_TOL: f64 = 1e-13;

/// Rejection budget of [`sample_jp`].
pub const JP_REJECTION_BUDGET: usize = 10_000;

/// Grid size used to estimate sup norms.
const SUP_GRID: usize = 1 << 14;

/// Finite expansion `Σ a_{k,ℓ} ψ_{k,ℓ}` in a dyadic wavelet system.
#[derive(Debug, Clone)]
pub struct WaveletExpansion {
    wavelet: DyadicWavelet,
    coeffs: CoeffSeq<WaveletIndex>,
    table: Table,
}

/// Per-level lookup tables so evaluation touches only the wavelets whose
/// support contains the point.
#[derive(Debug, Clone)]
enum Table {
    One(Vec<(u32, HashMap<u64, f64>)>),
    Multi(Vec<(Vec<u32>, HashMap<Vec<u64>, f64>)>),
}

impl Table {
    fn build(d: usize, coeffs: &CoeffSeq<WaveletIndex>) -> Self {
        if d == 1 {
            let mut by_k: std::collections::BTreeMap<u32, HashMap<u64, f64>> = Default::default();
            for (i, a) in coeffs.iter() {
                by_k.entry(i.k[0]).or_default().insert(i.l[0], *a);
            }
            Table::One(by_k.into_iter().collect())
        } else {
            let mut by_k: std::collections::BTreeMap<Vec<u32>, HashMap<Vec<u64>, f64>> =
                Default::default();
            for (i, a) in coeffs.iter() {
                by_k.entry(i.k.clone()).or_default().insert(i.l.clone(), *a);
            }
            Table::Multi(by_k.into_iter().collect())
        }
    }
}

impl PartialEq for WaveletExpansion {
    fn eq(&self, other: &Self) -> bool {
        self.wavelet == other.wavelet && self.coeffs == other.coeffs
    }
}

#[derive(Serialize, Deserialize)]
struct RawCoeff {
    k: Vec<u32>,
    l: Vec<u64>,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct RawExpansion {
    mothers: Vec<String>,
    coefficients: Vec<RawCoeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<ClassBounds>,
}

impl Serialize for WaveletExpansion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawExpansion {
            mothers: self.wavelet.ids(),
            coefficients: self
                .coeffs
                .iter()
                .map(|(i, a)| RawCoeff {
                    k: i.k.clone(),
                    l: i.l.clone(),
                    a: *a,
                })
                .collect(),
            bounds: self.coeffs.bounds,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WaveletExpansion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawExpansion::deserialize(d)?;
        let conv = || -> Result<Self> {
            let w = DyadicWavelet::from_ids(&raw.mothers)?;
            let mut pairs = Vec::with_capacity(raw.coefficients.len());
            for c in raw.coefficients {
                pairs.push((WaveletIndex::new(c.k, c.l)?, c.a));
            }
            let mut coeffs = CoeffSeq::from_pairs(pairs);
            coeffs.bounds = raw.bounds;
            WaveletExpansion::new(w, coeffs)
        };
        conv().map_err(serde::de::Error::custom)
    }
}

impl WaveletExpansion {
    pub fn new(wavelet: DyadicWavelet, coeffs: CoeffSeq<WaveletIndex>) -> Result<Self> {
        for (i, _) in coeffs.iter() {
            wavelet.check_index(i)?;
        }
        let table = Table::build(wavelet.dim(), &coeffs);
        Ok(Self {
            wavelet,
            coeffs,
            table,
        })
    }

    /// Expansion with a single coefficient.
    pub fn single(wavelet: DyadicWavelet, idx: WaveletIndex, a: f64) -> Result<Self> {
        Self::new(wavelet, CoeffSeq::from_pairs([(idx, a)]))
    }

    pub fn wavelet(&self) -> &DyadicWavelet {
        &self.wavelet
    }

    pub fn coeffs(&self) -> &CoeffSeq<WaveletIndex> {
        &self.coeffs
    }

    pub fn bounds(&self) -> Option<ClassBounds> {
        self.coeffs.bounds
    }

    pub fn dim(&self) -> usize {
        self.wavelet.dim()
    }

    pub fn max_level(&self) -> u32 {
        self.coeffs
            .iter()
            .map(|(i, _)| i.max_level())
            .max()
            .unwrap_or(0)
    }

    /// `Σ a ψ(x)`; zero outside the unit cube.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return 0.0;
        }
        let mothers = self.wavelet.mothers();
        match &self.table {
            Table::One(levels) => {
                let m = mothers[0].as_ref();
                let mut acc = 0.0;
                for (k, map) in levels {
                    for l in candidates(*k, x[0]).into_iter().flatten() {
                        if let Some(a) = map.get(&l) {
                            acc += a * mother::scaled(m, *k, l, x[0]);
                        }
                    }
                }
                acc
            }
            Table::Multi(levels) => {
                let d = x.len();
                let mut acc = 0.0;
                let mut key = vec![0u64; d];
                for (k, map) in levels {
                    let cand: Vec<[Option<u64>; 2]> =
                        (0..d).map(|i| candidates(k[i], x[i])).collect();
                    for mask in 0..(1usize << d) {
                        let mut ok = true;
                        for i in 0..d {
                            match cand[i][(mask >> i) & 1] {
                                Some(l) => key[i] = l,
                                None => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        if !ok {
                            continue;
                        }
                        if let Some(a) = map.get(&key) {
                            let mut v = *a;
                            for i in 0..d {
                                v *= mother::scaled(mothers[i].as_ref(), k[i], key[i], x[i]);
                            }
                            acc += v;
                        }
                    }
                }
                acc
            }
        }
    }

    /// Per-axis union of the knots of every wavelet in the support.
    pub fn axis_breakpoints(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out: Vec<Vec<f64>> = vec![Vec::new(); d];
        for (ax, bucket) in out.iter_mut().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for (i, _) in self.coeffs.iter() {
                if seen.insert((i.k[ax], i.l[ax])) {
                    bucket.extend(self.wavelet.axis_knots(ax, i.k[ax], i.l[ax]));
                }
            }
            bucket.sort_by(f64::total_cmp);
            bucket.dedup();
        }
        out
    }

    /// Largest `|f|` over a grid of about 2^14 cell midpoints, together with
    /// midpoints between consecutive knots in `d = 1`. Exact for Haar
    /// expansions whose knots lie on the grid.
    pub fn sup_estimate(&self) -> f64 {
        let d = self.dim();
        if d == 1 {
            let mut best: f64 = 0.0;
            for j in 0..SUP_GRID {
                let x = (j as f64 + 0.5) / SUP_GRID as f64;
                best = best.max(self.eval(&[x]).abs());
            }
            let knots = quad::partition(0.0, 1.0, &self.axis_breakpoints()[0]);
            for w in knots.windows(2) {
                best = best.max(self.eval(&[0.5 * (w[0] + w[1])]).abs());
            }
            best
        } else {
            let g = ((SUP_GRID as f64).powf(1.0 / d as f64).floor() as usize).max(2);
            let mut pos = vec![0usize; d];
            let mut x = vec![0.0; d];
            let mut best: f64 = 0.0;
            loop {
                for i in 0..d {
                    x[i] = (pos[i] as f64 + 0.5) / g as f64;
                }
                best = best.max(self.eval(&x).abs());
                let mut i = 0;
                loop {
                    pos[i] += 1;
                    if pos[i] < g {
                        break;
                    }
                    pos[i] = 0;
                    i += 1;
                    if i == d {
                        return best;
                    }
                }
            }
        }
    }

    /// Checks the weak-ℓᵖ and dyadic tail bounds the expansion claims.
    pub fn validate(&self) -> Result<()> {
        let Some(b) = self.coeffs.bounds else {
            return Ok(());
        };
        let w = weak_lp_norm(&self.coeffs, b.p)?;
        if w > b.c1 * (1.0 + 1e-12) {
            return Err(invalid(format!("weak l^p norm {w} exceeds C1 = {}", b.c1)));
        }
        let t = tail_compactness_check(&self.coeffs, b.c2, b.beta, TailOrdering::Dyadic)?;
        if let Some(m) = t.first_violation {
            return Err(invalid(format!("dyadic tail bound fails at level {m}")));
        }
        Ok(())
    }
}

/// Shifts `ℓ` at level `k` whose support `[ℓ 2^-k, (ℓ+1) 2^-k]` contains `x`.
pub(crate) fn candidates(k: u32, x: f64) -> [Option<u64>; 2] {
    let n = 1u64 << k;
    let s = (k as f64).exp2() * x;
    let f = s.floor();
    let lo = if f >= 0.0 && (f as u64) < n {
        Some(f as u64)
    } else {
        None
    };
    let c = s.ceil() - 1.0;
    let hi = if c != f && c >= 0.0 && (c as u64) < n {
        Some(c as u64)
    } else {
        None
    };
    [lo, hi]
}

/// Inner products `⟨f, ψ_{k,ℓ}⟩` for every index up to `max_level`.
///
/// When both `f` and the mothers are piecewise polynomial on axis-aligned
/// cells, a fixed Gauss–Legendre rule on every cell is exact. Otherwise each
/// coefficient is computed by (nested) adaptive quadrature.
pub fn analyze(
    w: &DyadicWavelet,
    f: &TargetFunction,
    max_level: u32,
) -> Result<CoeffSeq<WaveletIndex>> {
    let d = w.dim();
    if f.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: f.dim(),
        });
    }
    let fbreaks = f.axis_breakpoints();
    let exact = w.piecewise_polynomial() && f.piecewise_polynomial() && fbreaks.is_some();
    let fbreaks: Vec<Vec<f64>> = fbreaks
        .map(|b| {
            b.into_iter()
                .map(|mut v| {
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect()
        })
        .unwrap_or_else(|| vec![Vec::new(); d]);
    let mut out = CoeffSeq::new();
    for idx in indices_up_to(d, max_level) {
        let sup = idx.support();
        let lo: Vec<f64> = sup.iter().map(|s| s.0).collect();
        let hi: Vec<f64> = sup.iter().map(|s| s.1).collect();
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|ax| {
                let fb = &fbreaks[ax];
                let a = fb.partition_point(|t| *t <= lo[ax]);
                let b = fb.partition_point(|t| *t < hi[ax]);
                let mut v = fb[a..b].to_vec();
                v.extend(w.axis_knots(ax, idx.k[ax], idx.l[ax]));
                v
            })
            .collect();
        let g = |x: &[f64]| f.eval_unchecked(x) * w.eval_unchecked(&idx, x);
        let a = if d == 1 {
            let g1 = |t: f64| g(&[t]);
            if exact {
                quad::integrate_pieces(g1, lo[0], hi[0], &breaks[0])
            } else {
                quad::integrate_adaptive(g1, lo[0], hi[0], &breaks[0], 1e-11)
                    .map_err(|_| Error::Quadrature(format!("coefficient {idx:?}")))?
            }
        } else if exact {
            quad::integrate_box(g, &lo, &hi, &breaks)
        } else {
            quad::integrate_box_adaptive(g, &lo, &hi, &breaks, 1e-10)
                .map_err(|_| Error::Quadrature(format!("coefficient {idx:?}")))?
        };
        if a.abs() > ANALYSIS_ZERO_TOL {
            out.set(idx, a);
        }
    }
    Ok(out)
}

/// The function represented by a finite expansion.
pub fn synthesize(e: &WaveletExpansion) -> TargetFunction {
    TargetFunction::from_expansion(e.clone())
}

fn check_jp_params(p: f64, c1: f64, c2: f64, beta: f64) -> Result<()> {
    if !(p > 0.0 && p < 2.0) {
        return Err(invalid(format!("p must lie in (0, 2), got {p}")));
    }
    if !(c1 > 0.0 && c2 > 0.0 && beta > 0.0) {
        return Err(invalid(format!(
            "C1, C2, beta must be positive (got {c1}, {c2}, {beta})"
        )));
    }
    Ok(())
}

/// Draws an element of `J^p_ψ` supported on levels `≤ max_level`.
///
/// Magnitudes `C1 i^{-1/p} u_i` with `u_i ~ U[1/2, 1]` are sorted decreasingly
/// and assigned coarse-to-fine with random signs; draws failing the dyadic
/// tail bound are rejected.
pub fn sample_jp<R: Rng + ?Sized>(
    w: &DyadicWavelet,
    p: f64,
    c1: f64,
    c2: f64,
    beta: f64,
    max_level: u32,
    rng: &mut R,
) -> Result<WaveletExpansion> {
    sample_jp_counted(w, p, c1, c2, beta, max_level, rng).map(|(e, _)| e)
}

/// [`sample_jp`] that also returns the number of attempts used.
pub fn sample_jp_counted<R: Rng + ?Sized>(
    w: &DyadicWavelet,
    p: f64,
    c1: f64,
    c2: f64,
    beta: f64,
    max_level: u32,
    rng: &mut R,
) -> Result<(WaveletExpansion, usize)> {
    check_jp_params(p, c1, c2, beta)?;
    let idx = indices_up_to(w.dim(), max_level);
    let bounds = ClassBounds { p, c1, c2, beta };
    for attempt in 1..=JP_REJECTION_BUDGET {
        let mut mags: Vec<f64> = (0..idx.len())
            .map(|i| c1 * ((i + 1) as f64).powf(-1.0 / p) * rng.random_range(0.5..=1.0))
            .collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let pairs: Vec<(WaveletIndex, f64)> = idx
            .iter()
            .zip(mags)
            .map(|(i, m)| (i.clone(), if rng.random_bool(0.5) { m } else { -m }))
            .collect();
        let coeffs = CoeffSeq::from_pairs(pairs).with_bounds(bounds);
        if tail_compactness_check(&coeffs, c2, beta, TailOrdering::Dyadic)?.holds {
            return Ok((WaveletExpansion::new(w.clone(), coeffs)?, attempt));
        }
    }
    Err(Error::RejectionBudget {
        attempts: JP_REJECTION_BUDGET,
        reason: format!("tail bound C2 = {c2}, beta = {beta} not met with C1 = {c1}, p = {p}"),
    })
}

/// Bounds of a `K^p_Ψ` member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpBounds {
    pub n_s: usize,
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub beta: f64,
}

/// One term `f_j(A_j x - b_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineWaveletTerm {
    pub map: AffineMap,
    pub expansion: WaveletExpansion,
}

/// `Σ_j f_j(A_j x - b_j)` with every `f_j ∈ J^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineWaveletSum {
    pub terms: Vec<AffineWaveletTerm>,
    pub bounds: KpBounds,
}

impl AffineWaveletSum {
    pub fn dim(&self) -> usize {
        self.terms.first().map_or(1, |t| t.map.dim())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.terms
            .iter()
            .map(|t| {
                t.map.apply_into(x, &mut y);
                t.expansion.eval(&y)
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.len() > self.bounds.n_s {
            return Err(invalid(format!(
                "{} terms exceed n_s = {}",
                self.terms.len(),
                self.bounds.n_s
            )));
        }
        for t in &self.terms {
            t.map.validate(self.bounds.c3)?;
            t.expansion.validate()?;
        }
        Ok(())
    }

    /// Preimages of every term's knots (only for `d = 1`).
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        self.terms
            .iter()
            .flat_map(|t| {
                let mut k = t.expansion.axis_breakpoints().swap_remove(0);
                k.extend([0.0, 1.0]);
                t.map.preimages_1d(&k)
            })
            .collect()
    }

    /// `1.05 Σ_j ‖f_j‖_∞` with each sup estimated on the grid.
    pub fn sup_bound(&self) -> f64 {
        1.05 * self
            .terms
            .iter()
            .map(|t| t.expansion.sup_estimate())
            .sum::<f64>()
    }
}

/// Draws an element of `K^p_Ψ`: `n_s` independent `J^p` draws, each with a
/// mother system picked uniformly from `psi_set`, composed with affine maps
/// bounded by `C3`.
#[allow(clippy::too_many_arguments)]
pub fn sample_kp<R: Rng + ?Sized>(
    psi_set: &[DyadicWavelet],
    n_s: usize,
    p: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    beta: f64,
    max_level: u32,
    rng: &mut R,
) -> Result<TargetFunction> {
    if n_s == 0 {
        return Err(invalid("n_s must be at least 1"));
    }
    let d = psi_set
        .first()
        .ok_or_else(|| invalid("empty wavelet set"))?
        .dim();
    if psi_set.iter().any(|w| w.dim() != d) {
        return Err(invalid("wavelet systems have mixed dimensions"));
    }
    if !(c3 > 0.0) {
        return Err(invalid(format!("C3 must be positive, got {c3}")));
    }
    let mut terms = Vec::with_capacity(n_s);
    for _ in 0..n_s {
        let w = &psi_set[rng.random_range(0..psi_set.len())];
        let expansion = sample_jp(w, p, c1, c2, beta, max_level, rng)?;
        let map = sample_affine_map(d, c3, rng, 1000)?;
        terms.push(AffineWaveletTerm { map, expansion });
    }
    let sum = AffineWaveletSum {
        terms,
        bounds: KpBounds {
            n_s,
            p,
            c1,
            c2,
            c3,
            beta,
        },
    };
    Ok(TargetFunction::from_affine_wavelet_sum(sum))
}

/// Result of [`top_n_truncate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub expansion: WaveletExpansion,
    /// `Σ a²` over the dropped coefficients, which by Parseval is the squared
    /// L² distance between the input and the truncation.
    pub discarded_energy: f64,
}

/// Keeps the `n` absolutely largest coefficients among indices with
/// `max_i k_i < m`; ties are broken by index order.
pub fn top_n_truncate(e: &WaveletExpansion, n: usize, m: u32) -> Result<Truncation> {
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let mut eligible: Vec<(&WaveletIndex, f64)> = e
        .coeffs
        .iter()
        .filter(|(i, _)| i.max_level() < m)
        .map(|(i, a)| (i, *a))
        .collect();
    eligible.sort_by(|x, y| y.1.abs().total_cmp(&x.1.abs()).then_with(|| x.0.cmp(y.0)));
    eligible.truncate(n);
    let mut kept = CoeffSeq::from_pairs(eligible.into_iter().map(|(i, a)| (i.clone(), a)));
    kept.bounds = e.coeffs.bounds;
    let discarded_energy = e
        .coeffs
        .iter()
        .filter(|(i, _)| kept.get(i) == 0.0)
        .map(|(_, a)| a * a)
        .sum();
    Ok(Truncation {
        expansion: WaveletExpansion::new(e.wavelet.clone(), kept)?,
        discarded_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::coeff::weak_lp_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn haar1() -> DyadicWavelet {
        DyadicWavelet::haar(1)
    }

    #[test]
    fn single_mother_coefficient_is_the_mother() {
        let e = WaveletExpansion::single(haar1(), WaveletIndex::d1(0, 0).unwrap(), 1.0).unwrap();
        for x in [0.1, 0.4, 0.5, 0.7, 1.0] {
            assert_eq!(
                e.eval(&[x]),
                super::super::Mother::eval(&super::super::Haar, x)
            );
        }
    }

    #[test]
    fn boundary_points_see_both_neighbours() {
        assert_eq!(candidates(2, 0.5), [Some(2), Some(1)]);
        assert_eq!(candidates(2, 1.0), [None, Some(3)]);
        assert_eq!(candidates(2, 0.3), [Some(1), None]);
    }

    #[test]
    fn analyze_recovers_single_wavelet() {
        let e = WaveletExpansion::single(haar1(), WaveletIndex::d1(1, 0).unwrap(), 1.0).unwrap();
        let c = analyze(&haar1(), &synthesize(&e), 4).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.get(&WaveletIndex::d1(1, 0).unwrap()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_step_coefficients_match_hand_integrals() {
        use crate::classes::piecewise::PiecewiseConstantFn;
        let f = TargetFunction::from_piecewise(
            PiecewiseConstantFn::new(0.0, [(0.5, 2f64.sqrt())]),
            1,
            2f64.sqrt(),
        )
        .unwrap();
        let c = analyze(&haar1(), &f, 4).unwrap();
        // ⟨√2·1_{[1/2,1]}, ψ_{0,0}⟩ = -√2/2; every finer Haar function lives
        // entirely on one side of 1/2 and integrates to zero against a constant.
        assert_eq!(c.len(), 1);
        assert!((c.get(&WaveletIndex::d1(0, 0).unwrap()) + 2f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn jp_samples_pass_validators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = haar1();
        for _ in 0..20 {
            let e = sample_jp(&w, 2.0 / 3.0, 1.0, 1.0, 1.0, 6, &mut rng).unwrap();
            assert!(weak_lp_norm(e.coeffs(), 2.0 / 3.0).unwrap() <= 1.0);
            e.validate().unwrap();
        }
    }

    #[test]
    fn truncation_keeps_largest() {
        let c = CoeffSeq::from_pairs([
            (WaveletIndex::d1(0, 0).unwrap(), 0.5),
            (WaveletIndex::d1(1, 1).unwrap(), -0.9),
        ]);
        let e = WaveletExpansion::new(haar1(), c).unwrap();
        let t = top_n_truncate(&e, 1, 5).unwrap();
        assert_eq!(t.expansion.coeffs().len(), 1);
        assert_eq!(
            t.expansion.coeffs().get(&WaveletIndex::d1(1, 1).unwrap()),
            -0.9
        );
        assert!((t.discarded_energy - 0.25).abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let e = WaveletExpansion::single(haar1(), WaveletIndex::d1(2, 1).unwrap(), 0.25).unwrap();
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        assert_eq!(v["mothers"][0], "haar");
        assert_eq!(v["coefficients"][0]["k"][0], 2);
        assert_eq!(v["coefficients"][0]["a"], 0.25);
        let back: WaveletExpansion = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }
}
