//! Mother wavelets and the process-wide registry used to resolve them by id.

use crate::error::{invalid, Result};
use crate::quad;
use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock, RwLock};

/// A one-dimensional mother wavelet `ψ` supported in `[0, 1]` with `‖ψ‖_{L²} = 1`.
pub trait Mother: Send + Sync + Debug {
    fn id(&self) -> &str;

    /// Value at `t`; implementations return 0 outside `[0, 1]`.
    fn eval(&self, t: f64) -> f64;

    /// Points of `[0, 1]` between which `ψ` is a polynomial (endpoints included).
    fn knots(&self) -> Vec<f64>;

    /// Whether `ψ` is piecewise polynomial between [`Mother::knots`], so fixed
    /// Gauss–Legendre rules integrate products with other such functions exactly.
    fn piecewise_polynomial(&self) -> bool {
        true
    }

    fn sup_norm(&self) -> f64;
}

/// `ψ = 1_{[0,1/2)} - 1_{[1/2,1)}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Haar;

impl Mother for Haar {
    fn id(&self) -> &str {
        "haar"
    }

    fn eval(&self, t: f64) -> f64 {
        if (0.0..0.5).contains(&t) {
            1.0
        } else if (0.5..1.0).contains(&t) {
            -1.0
        } else {
            0.0
        }
    }

    fn knots(&self) -> Vec<f64> {
        vec![0.0, 0.5, 1.0]
    }

    fn sup_norm(&self) -> f64 {
        1.0
    }
}

type Registry = RwLock<HashMap<String, Arc<dyn Mother>>>;

fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| {
        let mut m: HashMap<String, Arc<dyn Mother>> = HashMap::new();
        m.insert("haar".into(), Arc::new(Haar));
        RwLock::new(m)
    })
}

/// Looks up a registered mother by id.
pub fn mother(id: &str) -> Option<Arc<dyn Mother>> {
    registry()
        .read()
        .expect("mother registry poisoned")
        .get(id)
        .cloned()
}

/// Level up to which [`register_mother`] verifies orthonormality.
pub const REGISTRATION_LEVEL: u32 = 4;

/// Registers a mother after verifying by quadrature that its dyadic family is
/// orthonormal up to [`REGISTRATION_LEVEL`].
pub fn register_mother(m: Arc<dyn Mother>) -> Result<()> {
    let worst = orthonormality_defect(m.as_ref(), REGISTRATION_LEVEL)?;
    if worst > 1e-8 {
        return Err(invalid(format!(
            "mother '{}' is not orthonormal (Gram defect {worst:e})",
            m.id()
        )));
    }
    registry()
        .write()
        .expect("mother registry poisoned")
        .insert(m.id().to_string(), m);
    Ok(())
}

/// `∫ ψ_{k,ℓ} ψ_{k',ℓ'}` over `[0, 1]` by breakpoint-aware quadrature.
pub fn inner_1d(m: &dyn Mother, k: u32, l: u64, k2: u32, l2: u64) -> Result<f64> {
    let (lo1, hi1) = support(k, l);
    let (lo2, hi2) = support(k2, l2);
    let lo = lo1.max(lo2);
    let hi = hi1.min(hi2);
    if lo >= hi {
        return Ok(0.0);
    }
    let mut breaks = mapped_knots(m, k, l);
    breaks.extend(mapped_knots(m, k2, l2));
    let f = |x: f64| scaled(m, k, l, x) * scaled(m, k2, l2, x);
    if m.piecewise_polynomial() {
        Ok(quad::integrate_pieces(f, lo, hi, &breaks))
    } else {
        quad::integrate_adaptive(f, lo, hi, &breaks, 1e-13)
    }
}

/// Largest deviation of the 1-d Gram matrix from the identity up to `level`.
pub fn orthonormality_defect(m: &dyn Mother, level: u32) -> Result<f64> {
    let idx: Vec<(u32, u64)> = (0..=level)
        .flat_map(|k| (0..1u64 << k).map(move |l| (k, l)))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, &(k, l)) in idx.iter().enumerate() {
        for &(k2, l2) in &idx[i..] {
            let g = inner_1d(m, k, l, k2, l2)?;
            let target = if (k, l) == (k2, l2) { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    Ok(worst)
}

pub(crate) fn support(k: u32, l: u64) -> (f64, f64) {
    let s = (-(k as f64)).exp2();
    (l as f64 * s, (l + 1) as f64 * s)
}

pub(crate) fn mapped_knots(m: &dyn Mother, k: u32, l: u64) -> Vec<f64> {
    let s = (-(k as f64)).exp2();
    m.knots().into_iter().map(|t| (l as f64 + t) * s).collect()
}

/// `2^{k/2} ψ(2^k x - ℓ)`.
pub(crate) fn scaled(m: &dyn Mother, k: u32, l: u64, x: f64) -> f64 {
    let t = (k as f64).exp2() * x - l as f64;
    (k as f64 * 0.5).exp2() * m.eval(t)
}
