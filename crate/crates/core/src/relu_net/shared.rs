//! `N`-sharing families `Σ c_i f(A_i x - b_i)` over one base network.

use super::network::ReluNetwork;
use crate::classes::affine::AffineMap;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// One member `(c, A, b)` of a shared family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedAtom {
    pub c: f64,
    pub map: AffineMap,
}

/// `x ↦ Σ_i c_i base(A_i x - b_i)` with `|c_i|, ‖A_i‖_∞, ‖b_i‖_∞ ≤ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedFamily {
    pub base: ReluNetwork,
    pub atoms: Vec<SharedAtom>,
}

impl SharedFamily {
    /// Checks the atom bounds against the base network's `B`.
    pub fn new(base: ReluNetwork, atoms: Vec<SharedAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("a shared family needs N >= 1 atoms"));
        }
        let b = base.arch().bound;
        let d = base.input_dim();
        for (i, a) in atoms.iter().enumerate() {
            if a.map.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: a.map.dim(),
                });
            }
            if a.c.abs() > b || a.map.max_entry() > b || a.map.max_shift() > b {
                return Err(invalid(format!(
                    "atom {i} exceeds the magnitude bound B = {b}"
                )));
            }
        }
        Ok(Self { base, atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Half-width `B(D+1)` of the cube on which the base network is evaluated.
    pub fn extended_radius(&self) -> f64 {
        self.base.arch().bound * (self.base.arch().width as f64 + 1.0)
    }
}

/// `Σ c_i base(A_i x - b_i)` for `x ∈ [0, 1]^d`. The base network is
/// evaluated on `[-B(D+1), B(D+1)]^d`, which contains every `A_i x - b_i`.
pub fn eval_shared(fam: &SharedFamily, x: &[f64]) -> Result<f64> {
    let d = fam.base.input_dim();
    if x.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: x.len(),
        });
    }
    if x.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Domain { point: x.to_vec() });
    }
    let r = fam.extended_radius();
    let mut y = vec![0.0; d];
    let mut acc = 0.0;
    for a in &fam.atoms {
        a.map.apply_into(x, &mut y);
        if y.iter().any(|t| t.abs() > r) {
            return Err(Error::Domain { point: y.clone() });
        }
        acc += a.c * fam.base.forward_unchecked(&y);
    }
    Ok(acc)
}
