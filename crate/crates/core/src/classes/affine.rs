//! Affinely transformed unit-norm base functions and the ℓ⁰-bounded affine class.

use crate::error::{invalid, Error, Result};
use crate::quad;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One-dimensional profile on `[0, 1]`, zero outside. Each profile has unit
/// L² norm on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    /// `(1 - jump)^{-1/2} 1_{[jump, 1]}`; `jump = 1/2` gives `√2·1_{[1/2,1]}`.
    Step { jump: f64 },
    /// Haar mother `1_{[0,1/2)} - 1_{[1/2,1)}`.
    Haar,
    /// `1_{[0, 1]}`.
    Box,
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match *self {
            Profile::Step { jump } => {
                if t >= jump {
                    1.0 / (1.0 - jump).sqrt()
                } else {
                    0.0
                }
            }
            Profile::Haar => {
                if t < 0.5 {
                    1.0
                } else if t < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Profile::Box => 1.0,
        }
    }

    /// Points in `[0, 1]` where the profile may be discontinuous.
    pub fn knots(&self) -> Vec<f64> {
        match *self {
            Profile::Step { jump } => vec![0.0, jump, 1.0],
            Profile::Haar => vec![0.0, 0.5, 1.0],
            Profile::Box => vec![0.0, 1.0],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            Profile::Step { jump } => 1.0 / (1.0 - jump).sqrt(),
            Profile::Haar | Profile::Box => 1.0,
        }
    }
}

/// A base function `φ(x) = Π_i profile_i(x_i)` on `[0, 1]^d` with `‖φ‖_{L²} = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBase")]
pub struct BaseFunction {
    pub id: String,
    factors: Vec<Profile>,
}

#[derive(Deserialize)]
struct RawBase {
    id: String,
    factors: Vec<Profile>,
}

impl TryFrom<RawBase> for BaseFunction {
    type Error = Error;
    fn try_from(r: RawBase) -> Result<Self> {
        BaseFunction::new(r.id, r.factors)
    }
}

impl BaseFunction {
    /// Registers a base function after checking its L² norm by quadrature.
    pub fn new(id: impl Into<String>, factors: Vec<Profile>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("base function needs at least one factor"));
        }
        for f in &factors {
            if let Profile::Step { jump } = f {
                if !(*jump >= 0.0 && *jump < 1.0) {
                    return Err(invalid(format!("step location {jump} outside [0, 1)")));
                }
            }
        }
        let norm_sq: f64 = factors
            .iter()
            .map(|f| quad::integrate_pieces(|t| f.eval(t).powi(2), 0.0, 1.0, &f.knots()))
            .product();
        if (norm_sq - 1.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "base function has squared L2 norm {norm_sq}, expected 1"
            )));
        }
        Ok(Self {
            id: id.into(),
            factors,
        })
    }

    /// `√2·1_{[1/2, 1]}` on `[0, 1]`.
    pub fn half_step() -> Self {
        Self::new("half_step", vec![Profile::Step { jump: 0.5 }]).expect("unit norm")
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Profile] {
        &self.factors
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(y)
            .map(|(f, t)| f.eval(*t))
            .product()
    }

    pub fn sup_norm(&self) -> f64 {
        self.factors.iter().map(Profile::sup_norm).product()
    }
}

/// The affine map `x ↦ A x - b` on `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row-major `d × d` matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if d == 0 || a.len() != d * d {
            return Err(invalid(format!(
                "affine map needs a {d}x{d} matrix, got {} entries",
                a.len()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn identity(d: usize) -> Self {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
        }
        Self { a, b: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.a[i * d + j] * x[j]).sum::<f64>() - self.b[i])
            .collect()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            out[i] = (0..d).map(|j| self.a[i * d + j] * x[j]).sum::<f64>() - self.b[i];
        }
    }

    pub fn det(&self) -> f64 {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.a).determinant()
    }

    pub fn max_entry(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_shift(&self) -> f64 {
        self.b.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks `|det A|^{-1}, ‖A‖_∞, ‖b‖_∞ ≤ C`.
    pub fn validate(&self, c: f64) -> Result<()> {
        let tol = 1e-12 * (1.0 + c);
        let det = self.det().abs();
        if det == 0.0 || 1.0 / det > c + tol {
            return Err(invalid(format!("|det A|^-1 = {} exceeds {c}", 1.0 / det)));
        }
        if self.max_entry() > c + tol {
            return Err(invalid(format!("‖A‖∞ = {} exceeds {c}", self.max_entry())));
        }
        if self.max_shift() > c + tol {
            return Err(invalid(format!("‖b‖∞ = {} exceeds {c}", self.max_shift())));
        }
        Ok(())
    }

    /// For `d = 1`, the points `x` with `a x - b = s` for each `s` in `knots`.
    pub fn preimages_1d(&self, knots: &[f64]) -> Vec<f64> {
        if self.dim() != 1 || self.a[0] == 0.0 {
            return Vec::new();
        }
        knots.iter().map(|s| (s + self.b[0]) / self.a[0]).collect()
    }

    /// Whether the image of `[0, 1]^d` can meet `[0, 1]^d` (coordinate-wise ranges overlap).
    pub fn image_meets_cube(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            let row = &self.a[i * d..(i + 1) * d];
            let lo: f64 = row.iter().map(|v| v.min(0.0)).sum::<f64>() - self.b[i];
            let hi: f64 = row.iter().map(|v| v.max(0.0)).sum::<f64>() - self.b[i];
            hi > 0.0 && lo < 1.0
        })
    }
}

/// Draws an affine map satisfying the `C` bounds.
///
/// `A` is sampled diagonally dominant: diagonal magnitudes uniform on
/// `[min(1, C), C]` with random signs and off-diagonal entries bounded by half
/// the smallest diagonal magnitude divided by `d`; `b ~ U[-C, C]^d`. Draws
/// failing the determinant bound, or whose image misses the unit cube, are
/// rejected.
pub fn sample_affine_map<R: Rng + ?Sized>(
    d: usize,
    c: f64,
    rng: &mut R,
    max_rounds: usize,
) -> Result<AffineMap> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(c > 0.0) {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    let lo = c.min(1.0);
    for _ in 0..max_rounds {
        let diag: Vec<f64> = (0..d)
            .map(|_| {
                let m = if c > lo { rng.random_range(lo..=c) } else { c };
                if rng.random_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect();
        let min_diag = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let r = 0.5 * min_diag / d as f64;
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = if i == j {
                    diag[i]
                } else if r > 0.0 {
                    rng.random_range(-r..=r)
                } else {
                    0.0
                };
            }
        }
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-c..=c)).collect();
        let map = AffineMap { a, b };
        if map.validate(c).is_ok() && map.image_meets_cube() {
            return Ok(map);
        }
    }
    Err(Error::RejectionBudget {
        attempts: max_rounds,
        reason: format!("no affine map with |det A|^-1, ‖A‖∞, ‖b‖∞ ≤ {c} in dimension {d}"),
    })
}

/// `c · φ(A x - b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineAtom {
    pub c: f64,
    pub map: AffineMap,
    pub phi: BaseFunction,
}

impl AffineAtom {
    pub fn new(c: f64, map: AffineMap, phi: BaseFunction) -> Result<Self> {
        if map.dim() != phi.dim() {
            return Err(Error::Dimension {
                expected: phi.dim(),
                got: map.dim(),
            });
        }
        Ok(Self { c, map, phi })
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let y = self.map.apply(x);
        self.c * self.phi.eval(&y)
    }

    pub fn validate(&self, c: f64) -> Result<()> {
        self.map.validate(c)?;
        if self.c.abs() > c * (1.0 + 1e-12) {
            return Err(invalid(format!("|c| = {} exceeds {c}", self.c.abs())));
        }
        Ok(())
    }

    pub fn breakpoints_1d(&self) -> Vec<f64> {
        self.map.preimages_1d(&self.phi.factors()[0].knots())
    }
}

/// An element `Σ c_i φ_i(A_i x - b_i)` of `I⁰_Φ(n_s, C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSum {
    pub atoms: Vec<AffineAtom>,
    pub bound: f64,
}

impl AffineSum {
    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(1, AffineAtom::dim)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.atoms.iter().map(|a| a.eval(x)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.atoms.iter().try_for_each(|a| a.validate(self.bound))
    }

    pub fn breakpoints_1d(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .flat_map(AffineAtom::breakpoints_1d)
            .collect()
    }
}

/// Draws `n_s` atoms with base functions chosen uniformly from `phi_set`.
pub fn sample_affine_sum<R: Rng + ?Sized>(
    n_s: usize,
    c: f64,
    phi_set: &[BaseFunction],
    rng: &mut R,
) -> Result<AffineSum> {
    if n_s == 0 {
        return Err(invalid("n_s must be at least 1"));
    }
    let first = phi_set
        .first()
        .ok_or_else(|| invalid("empty base function set"))?;
    let d = first.dim();
    if phi_set.iter().any(|p| p.dim() != d) {
        return Err(invalid("base functions have mixed dimensions"));
    }
    let mut atoms = Vec::with_capacity(n_s);
    for _ in 0..n_s {
        let phi = phi_set[rng.random_range(0..phi_set.len())].clone();
        let map = sample_affine_map(d, c, rng, 1000)?;
        let coef = rng.random_range(-c..=c);
        atoms.push(AffineAtom { c: coef, map, phi });
    }
    Ok(AffineSum { atoms, bound: c })
}

/// Sup-norm bound `n_s · C · max_φ ‖φ‖_∞` for `I⁰_Φ(n_s, C)`.
pub fn affine_class_sup_bound(n_s: usize, c: f64, phi_set: &[BaseFunction]) -> f64 {
    let m = phi_set
        .iter()
        .map(BaseFunction::sup_norm)
        .fold(0.0, f64::max);
    n_s as f64 * c * m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_step_is_unit_norm_and_evaluates() {
        let phi = BaseFunction::half_step();
        assert_eq!(phi.eval(&[0.25]), 0.0);
        assert!((phi.eval(&[0.75]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(phi.eval(&[1.5]), 0.0);
    }

    #[test]
    fn non_unit_norm_is_rejected() {
        assert!(BaseFunction::new("bad", vec![Profile::Step { jump: 1.0 }]).is_err());
    }

    #[test]
    fn identity_atom_reproduces_base() {
        let atom = AffineAtom::new(1.0, AffineMap::identity(1), BaseFunction::half_step()).unwrap();
        for x in [0.1, 0.49, 0.5, 0.9, 1.0] {
            assert_eq!(atom.eval(&[x]), BaseFunction::half_step().eval(&[x]));
        }
    }

    #[test]
    fn sampled_atoms_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phis = vec![BaseFunction::half_step()];
        for _ in 0..50 {
            let s = sample_affine_sum(3, 2.0, &phis, &mut rng).unwrap();
            s.validate().unwrap();
        }
    }

    #[test]
    fn infeasible_bound_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // |a| ≤ 0.5 and |a|^-1 ≤ 0.5 cannot both hold.
        let err = sample_affine_map(1, 0.5, &mut rng, 50).unwrap_err();
        assert!(matches!(err, Error::RejectionBudget { .. }));
    }
}
