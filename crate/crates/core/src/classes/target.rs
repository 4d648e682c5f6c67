//! The regression function `f°` with its class metadata.

use super::affine::{
    affine_class_sup_bound, sample_affine_sum, AffineMap, AffineSum, BaseFunction,
};
use super::piecewise::{sample_piecewise, PiecewiseConstantFn};
use crate::error::{invalid, Error, Result};
use crate::wavelets::{AffineWaveletSum, WaveletExpansion};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Class tag of a [`TargetFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Jk,
    I0,
    Jp,
    Kp,
    Custom,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Jk => "jk",
            TargetKind::I0 => "i0",
            TargetKind::Jp => "jp",
            TargetKind::Kp => "kp",
            TargetKind::Custom => "custom",
        }
    }
}

/// Class-specific payload. Serialized as `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TargetClass {
    /// Member of `J_k(C)`.
    Jk {
        k: usize,
        c: f64,
        function: PiecewiseConstantFn,
    },
    /// Member of `I⁰_Φ(n_s, C)`; the bound `C` lives in `sum.bound`.
    I0 { n_s: usize, sum: AffineSum },
    /// Member of `J^p_ψ`; bounds are attached to the coefficients.
    Jp { expansion: WaveletExpansion },
    /// Member of `K^p_Ψ`.
    Kp { sum: AffineWaveletSum },
    /// `Σ w_j f_j` of other targets, e.g. the mixtures `t f + (1 - t) g`.
    Custom {
        dim: usize,
        terms: Vec<WeightedTarget>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTarget {
    pub weight: f64,
    pub target: TargetFunction,
}

/// A true regression function together with a known bound on `‖f°‖_∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFunction {
    #[serde(flatten)]
    pub class: TargetClass,
    pub sup_bound: f64,
}

impl TargetFunction {
    /// Wraps a member of `J_k(C)`; the sup bound is `2C`.
    pub fn from_piecewise(function: PiecewiseConstantFn, k: usize, c: f64) -> Result<Self> {
        function.validate(k, c)?;
        Ok(Self {
            class: TargetClass::Jk { k, c, function },
            sup_bound: 2.0 * c,
        })
    }

    /// Wraps a member of `I⁰_Φ(n_s, C)`; the sup bound is `n_s C max ‖φ‖_∞`.
    pub fn from_affine_sum(sum: AffineSum, n_s: usize) -> Result<Self> {
        if sum.atoms.len() > n_s {
            return Err(invalid(format!(
                "{} atoms exceed n_s = {n_s}",
                sum.atoms.len()
            )));
        }
        sum.validate()?;
        let phis: Vec<BaseFunction> = sum.atoms.iter().map(|a| a.phi.clone()).collect();
        let sup_bound = affine_class_sup_bound(n_s, sum.bound, &phis);
        Ok(Self {
            class: TargetClass::I0 { n_s, sum },
            sup_bound,
        })
    }

    /// Wraps a finite expansion; the sup bound is 1.05 times the grid sup.
    pub fn from_expansion(expansion: WaveletExpansion) -> Self {
        let sup_bound = 1.05 * expansion.sup_estimate();
        Self {
            class: TargetClass::Jp { expansion },
            sup_bound,
        }
    }

    pub fn from_affine_wavelet_sum(sum: AffineWaveletSum) -> Self {
        let sup_bound = sum.sup_bound();
        Self {
            class: TargetClass::Kp { sum },
            sup_bound,
        }
    }

    /// `Σ w_j f_j`; the sup bound is `Σ |w_j| sup_bound_j`.
    pub fn linear_combination(terms: Vec<(f64, TargetFunction)>) -> Result<Self> {
        let dim = terms
            .first()
            .ok_or_else(|| invalid("empty combination"))?
            .1
            .dim();
        if let Some((_, t)) = terms.iter().find(|(_, t)| t.dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: t.dim(),
            });
        }
        let sup_bound = terms.iter().map(|(w, t)| w.abs() * t.sup_bound).sum();
        let terms = terms
            .into_iter()
            .map(|(weight, target)| WeightedTarget { weight, target })
            .collect();
        Ok(Self {
            class: TargetClass::Custom { dim, terms },
            sup_bound,
        })
    }

    pub fn kind(&self) -> TargetKind {
        match self.class {
            TargetClass::Jk { .. } => TargetKind::Jk,
            TargetClass::I0 { .. } => TargetKind::I0,
            TargetClass::Jp { .. } => TargetKind::Jp,
            TargetClass::Kp { .. } => TargetKind::Kp,
            TargetClass::Custom { .. } => TargetKind::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.class {
            TargetClass::Jk { .. } => 1,
            TargetClass::I0 { sum, .. } => sum.dim(),
            TargetClass::Jp { expansion } => expansion.dim(),
            TargetClass::Kp { sum } => sum.dim(),
            TargetClass::Custom { dim, .. } => *dim,
        }
    }

    /// `f°(x)` for `x ∈ [0, 1]^d`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Domain { point: x.to_vec() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the domain check.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.class {
            TargetClass::Jk { function, .. } => function.eval(x[0]),
            TargetClass::I0 { sum, .. } => sum.eval(x),
            TargetClass::Jp { expansion } => expansion.eval(x),
            TargetClass::Kp { sum } => sum.eval(x),
            TargetClass::Custom { terms, .. } => terms
                .iter()
                .map(|t| t.weight * t.target.eval_unchecked(x))
                .sum(),
        }
    }

    /// Whether the function is polynomial on every cell cut out by
    /// [`TargetFunction::axis_breakpoints`].
    pub fn piecewise_polynomial(&self) -> bool {
        match &self.class {
            TargetClass::Jk { .. } | TargetClass::I0 { .. } => true,
            TargetClass::Jp { expansion } => expansion.wavelet().piecewise_polynomial(),
            TargetClass::Kp { sum } => sum
                .terms
                .iter()
                .all(|t| t.expansion.wavelet().piecewise_polynomial()),
            TargetClass::Custom { terms, .. } => {
                terms.iter().all(|t| t.target.piecewise_polynomial())
            }
        }
    }

    /// Per-axis cut points such that the function is smooth on every cell of
    /// the induced grid, or `None` when the pieces are not axis-aligned.
    pub fn axis_breakpoints(&self) -> Option<Vec<Vec<f64>>> {
        match &self.class {
            TargetClass::Jk { function, .. } => Some(vec![function.breakpoints()]),
            TargetClass::I0 { sum, .. } => {
                let d = sum.dim();
                let mut out = vec![Vec::new(); d];
                for atom in &sum.atoms {
                    for (ax, f) in atom.phi.factors().iter().enumerate() {
                        out[ax].extend(axis_preimages(&atom.map, ax, &f.knots())?);
                    }
                }
                Some(out)
            }
            TargetClass::Jp { expansion } => Some(expansion.axis_breakpoints()),
            TargetClass::Kp { sum } => {
                let d = sum.dim();
                let mut out = vec![Vec::new(); d];
                for t in &sum.terms {
                    for (ax, knots) in t.expansion.axis_breakpoints().into_iter().enumerate() {
                        let mut knots = knots;
                        knots.extend([0.0, 1.0]);
                        out[ax].extend(axis_preimages(&t.map, ax, &knots)?);
                    }
                }
                Some(out)
            }
            TargetClass::Custom { dim, terms } => {
                let mut out = vec![Vec::new(); *dim];
                for t in terms {
                    for (ax, b) in t.target.axis_breakpoints()?.into_iter().enumerate() {
                        out[ax].extend(b);
                    }
                }
                Some(out)
            }
        }
    }

    /// Sorted breakpoints in `(0, 1)` for `d = 1` targets.
    pub fn breakpoints_1d(&self) -> Option<Vec<f64>> {
        if self.dim() != 1 {
            return None;
        }
        let mut b = self.axis_breakpoints()?.swap_remove(0);
        b.retain(|t| *t > 0.0 && *t < 1.0);
        b.sort_by(f64::total_cmp);
        b.dedup();
        Some(b)
    }

    /// Checks membership in the class the payload claims.
    pub fn validate(&self) -> Result<()> {
        match &self.class {
            TargetClass::Jk { k, c, function } => function.validate(*k, *c),
            TargetClass::I0 { n_s, sum } => {
                if sum.atoms.len() > *n_s {
                    return Err(invalid(format!(
                        "{} atoms exceed n_s = {n_s}",
                        sum.atoms.len()
                    )));
                }
                sum.validate()
            }
            TargetClass::Jp { expansion } => expansion.validate(),
            TargetClass::Kp { sum } => sum.validate(),
            TargetClass::Custom { terms, .. } => terms.iter().try_for_each(|t| t.target.validate()),
        }
    }
}

/// Preimages along `axis` of the cut points of coordinate `axis` under a
/// diagonal map; `None` if the map mixes coordinates.
fn axis_preimages(map: &AffineMap, axis: usize, knots: &[f64]) -> Option<Vec<f64>> {
    let d = map.dim();
    let row = &map.a[axis * d..(axis + 1) * d];
    if row.iter().enumerate().any(|(j, v)| j != axis && *v != 0.0) || row[axis] == 0.0 {
        return None;
    }
    Some(
        knots
            .iter()
            .map(|s| (s + map.b[axis]) / row[axis])
            .collect(),
    )
}

/// `f°(x)` with the domain check.
pub fn eval_target(f: &TargetFunction, x: &[f64]) -> Result<f64> {
    f.eval(x)
}

/// Draws a member of `J_k(C)` (see [`sample_piecewise`]).
pub fn sample_jk<R: Rng + ?Sized>(k: usize, c: f64, rng: &mut R) -> Result<TargetFunction> {
    TargetFunction::from_piecewise(sample_piecewise(k, c, rng)?, k, c)
}

/// Draws a member of `I⁰_Φ(n_s, C)` (see [`sample_affine_sum`]).
pub fn sample_i0<R: Rng + ?Sized>(
    n_s: usize,
    c: f64,
    phi_set: &[BaseFunction],
    rng: &mut R,
) -> Result<TargetFunction> {
    let sum = sample_affine_sum(n_s, c, phi_set, rng)?;
    let phis = phi_set.to_vec();
    let sup_bound = affine_class_sup_bound(n_s, c, &phis);
    Ok(TargetFunction {
        class: TargetClass::I0 { n_s, sum },
        sup_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::affine::AffineAtom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_step_eval_and_domain() {
        let f = TargetFunction::from_piecewise(PiecewiseConstantFn::new(0.0, [(0.5, 1.0)]), 1, 1.0)
            .unwrap();
        assert_eq!(f.eval(&[0.25]).unwrap(), 0.0);
        assert_eq!(f.eval(&[0.75]).unwrap(), 1.0);
        assert!(matches!(f.eval(&[1.5]), Err(Error::Domain { .. })));
    }

    #[test]
    fn json_shape_and_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = sample_jk(3, 2.0, &mut rng).unwrap();
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["kind"], "jk");
        assert!(v["params"]["function"]["jumps"].is_array());
        assert_eq!(v["sup_bound"], 4.0);
        let s = serde_json::to_string(&f).unwrap();
        let back: TargetFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn identity_atom_target() {
        let atom = AffineAtom::new(1.0, AffineMap::identity(1), BaseFunction::half_step()).unwrap();
        let f = TargetFunction::from_affine_sum(
            AffineSum {
                atoms: vec![atom],
                bound: 1.0,
            },
            1,
        )
        .unwrap();
        assert!((f.eval(&[0.75]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.eval(&[0.25]).unwrap(), 0.0);
        assert!((f.sup_bound - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn i0_sup_bound_dominates_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phis = vec![BaseFunction::new(
            "haar2",
            vec![
                super::super::affine::Profile::Haar,
                super::super::affine::Profile::Box,
            ],
        )
        .unwrap()];
        let f = sample_i0(3, 1.5, &phis, &mut rng).unwrap();
        f.validate().unwrap();
        for i in 0..100 {
            for j in 0..100 {
                let x = [i as f64 / 99.0, j as f64 / 99.0];
                assert!(f.eval(&x).unwrap().abs() <= f.sup_bound);
            }
        }
    }
}
