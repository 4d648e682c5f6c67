//! Constructive networks: ramp approximations of jumps, affine composition,
//! and the ramp/box dictionaries used by the constructive estimator.

use super::network::{validate_against, Dense, NetworkArch, ReluNetwork};
use crate::classes::affine::AffineAtom;
use crate::error::{invalid, Error, Result};
use std::collections::BTreeMap;

fn check_jump(jump: f64, w: f64) -> Result<()> {
    if !(jump > 0.0 && jump < 1.0) {
        return Err(invalid(format!("jump location {jump} outside (0, 1)")));
    }
    if !(w > 0.0 && w < jump.min(1.0 - jump)) {
        return Err(invalid(format!(
            "ramp width {w} outside (0, min(jump, 1 - jump))"
        )));
    }
    Ok(())
}

/// `(h/w)[ρ(t-(j-w)) - ρ(t-j) - ρ(t-1) + ρ(t-1-w)]` as four hidden neurons.
fn ramp_layer(jump: f64, w: f64) -> (Dense, Vec<f64>) {
    (
        Dense {
            rows: 4,
            cols: 1,
            data: vec![1.0; 4],
        },
        vec![jump - w, jump, 1.0, 1.0 + w],
    )
}

fn ramp_bound(height: f64, w: f64) -> f64 {
    (height.abs() / w).max(1.0 + w).max(1.0)
}

/// One-hidden-layer approximation of `height · 1_{[jump, 1]}`.
///
/// On `[0, 1]` the network is 0 up to `jump - w`, linear on `[jump - w, jump]`
/// and equal to `height` on `[jump, 1]`, so its `L²[0, 1]` error is
/// `|height| √(w/3)`. Past 1 it ramps back to 0 on `[1, 1 + w]`, which keeps
/// the error on the whole line finite (`|height| √(2w/3)`) when the network
/// is composed with affine maps.
pub fn build_jump_approx(jump: f64, height: f64, w: f64) -> Result<ReluNetwork> {
    check_jump(jump, w)?;
    let (w1, v1) = ramp_layer(jump, w);
    let s = height / w;
    let out = Dense {
        rows: 1,
        cols: 4,
        data: vec![s, -s, -s, s],
    };
    let net = ReluNetwork::new(
        NetworkArch::new(1, 0, 4, ramp_bound(height, w)),
        1,
        vec![w1, out],
        vec![v1],
    )?;
    let nz = net.nonzeros();
    let mut arch = *net.arch();
    arch.sparsity = nz.max(1);
    Ok(net.with_arch(arch))
}

/// Two-hidden-layer variant of [`build_jump_approx`] computing the same
/// function: the ramp combination is formed in a single second-layer neuron
/// `ρ(sgn(h) · ramp)` and read out with weight `sgn(h)`.
pub fn build_jump_approx_deep(jump: f64, height: f64, w: f64) -> Result<ReluNetwork> {
    check_jump(jump, w)?;
    let (w1, v1) = ramp_layer(jump, w);
    let sign = if height < 0.0 { -1.0 } else { 1.0 };
    let s = sign * height / w;
    let w2 = Dense {
        rows: 1,
        cols: 4,
        data: vec![s, -s, -s, s],
    };
    let out = Dense {
        rows: 1,
        cols: 1,
        data: vec![sign],
    };
    let net = ReluNetwork::new(
        NetworkArch::new(2, 0, 4, ramp_bound(height, w)),
        1,
        vec![w1, w2, out],
        vec![v1, vec![0.0]],
    )?;
    let nz = net.nonzeros();
    let mut arch = *net.arch();
    arch.sparsity = nz.max(1);
    Ok(net.with_arch(arch))
}

/// Architecture `(L+2, n_s(S + 2Dd + d² + d + 1), n_s D, max{B, C})` of the
/// composition of `n_s` affine atoms with a sub-network in `𝒩(L, S, D, B)`.
pub fn composed_arch(sub: &NetworkArch, n_s: usize, d: usize, c: f64) -> NetworkArch {
    let (l, s, w) = (sub.depth, sub.sparsity, sub.width);
    NetworkArch::new(
        l + 2,
        n_s * (s + 2 * w * d + d * d + d + 1),
        n_s * w,
        sub.bound.max(c),
    )
}

/// Network computing `Σ_i c_i sub(A_i x - b_i)`.
///
/// Each atom gets its own block. The first layer splits `y = A_i x - b_i`
/// into `ρ(y)` and `ρ(-y)`; the next applies the sub-network's first layer to
/// their difference; the sub-network's remaining hidden layers follow; a
/// final hidden layer splits the sub-network output into positive and
/// negative parts, which the output layer combines with weights `±c_i`.
///
/// Needs `D ≥ max(2d, 2)` for the blocks to fit, and fails if the wiring
/// would exceed the formula sparsity of [`composed_arch`].
pub fn compose_atoms(sub: &ReluNetwork, atoms: &[AffineAtom], c: f64) -> Result<ReluNetwork> {
    let d = sub.input_dim();
    if atoms.is_empty() {
        return Err(invalid("need at least one atom"));
    }
    if sub.arch().clip.is_some() {
        return Err(Error::Construction(
            "the sub-network must be unclipped".into(),
        ));
    }
    let sub_report = validate_against(sub, sub.arch());
    if !sub_report.valid {
        return Err(Error::Construction(format!(
            "sub-network violates its architecture: {:?}",
            sub_report.violations
        )));
    }
    for (i, a) in atoms.iter().enumerate() {
        if a.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: a.dim(),
            });
        }
        a.validate(c)
            .map_err(|e| invalid(format!("atom {i}: {e}")))?;
    }
    let sa = sub.arch();
    if sa.width < 2 * d || sa.width < 2 {
        return Err(Error::Construction(format!(
            "width {} is below max(2d, 2) = {}",
            sa.width,
            (2 * d).max(2)
        )));
    }
    let n_s = atoms.len();
    let l = sub.hidden_layers();
    let sw = sub.weights();
    let sb = sub.biases();

    // Hidden widths per block: 2d, widths of sub hidden layers, 2.
    let mut block: Vec<usize> = vec![2 * d];
    block.extend(sw[..l].iter().map(|w| w.rows));
    block.push(2);
    let mut weights: Vec<Dense> = Vec::with_capacity(l + 3);
    let mut biases: Vec<Vec<f64>> = Vec::with_capacity(l + 2);
    for (li, width) in block.iter().enumerate() {
        let cols = if li == 0 { d } else { n_s * block[li - 1] };
        weights.push(Dense::zeros(n_s * width, cols));
        biases.push(vec![0.0; n_s * width]);
    }
    weights.push(Dense::zeros(1, n_s * 2));

    for (i, atom) in atoms.iter().enumerate() {
        let a = &atom.map.a;
        let b = &atom.map.b;
        // Layer 1: ρ(Ax - b) and ρ(-Ax + b).
        let r0 = i * 2 * d;
        for r in 0..d {
            for col in 0..d {
                weights[0].set(r0 + r, col, a[r * d + col]);
                weights[0].set(r0 + d + r, col, -a[r * d + col]);
            }
            biases[0][r0 + r] = b[r];
            biases[0][r0 + d + r] = -b[r];
        }
        // Layer 2: sub layer 1 on (p - q).
        let w1 = &sw[0];
        let o1 = i * block[1];
        for r in 0..w1.rows {
            for col in 0..d {
                let v = w1.get(r, col);
                weights[1].set(o1 + r, r0 + col, v);
                weights[1].set(o1 + r, r0 + d + col, -v);
            }
            biases[1][o1 + r] = sb[0][r];
        }
        // Remaining sub hidden layers, block-diagonal.
        for k in 1..l {
            let wk = &sw[k];
            let ro = i * block[k + 1];
            let co = i * block[k];
            for r in 0..wk.rows {
                for col in 0..wk.cols {
                    weights[k + 1].set(ro + r, co + col, wk.get(r, col));
                }
                biases[k + 1][ro + r] = sb[k][r];
            }
        }
        // Split layer: ρ(±W_{L+1} h).
        let wl = &sw[l];
        let ro = i * 2;
        let co = i * block[l];
        for col in 0..wl.cols {
            weights[l + 1].set(ro, co + col, wl.get(0, col));
            weights[l + 1].set(ro + 1, co + col, -wl.get(0, col));
        }
        weights[l + 2].set(0, ro, atom.c);
        weights[l + 2].set(0, ro + 1, -atom.c);
    }
    let arch = composed_arch(sa, n_s, d, c);
    let net = ReluNetwork::new(arch, d, weights, biases)?;
    let report = validate_against(&net, &arch);
    if !report.valid {
        return Err(Error::Construction(format!(
            "composition exceeds its formula architecture: {:?}",
            report.violations
        )));
    }
    Ok(net)
}

/// Shallow network `Σ_j o_j ρ(x - t_j)` on `[0, 1]`; knots with equal `t` are
/// merged and zero output weights dropped.
pub fn ramp_spline(knots: &[(f64, f64)], clip: Option<f64>) -> Result<ReluNetwork> {
    let mut merged: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for &(t, o) in knots {
        if !t.is_finite() || !o.is_finite() {
            return Err(invalid("non-finite knot"));
        }
        let e = merged.entry(t.to_bits()).or_insert((t, 0.0));
        e.1 += o;
    }
    let mut ks: Vec<(f64, f64)> = merged.into_values().filter(|(_, o)| *o != 0.0).collect();
    ks.sort_by(|a, b| a.0.total_cmp(&b.0));
    if ks.is_empty() {
        ks.push((0.0, 0.0));
    }
    let m = ks.len();
    let w1 = Dense {
        rows: m,
        cols: 1,
        data: vec![1.0; m],
    };
    let v1: Vec<f64> = ks.iter().map(|k| k.0).collect();
    let out = Dense {
        rows: 1,
        cols: m,
        data: ks.iter().map(|k| k.1).collect(),
    };
    let bound = ks
        .iter()
        .fold(1.0f64, |b, (t, o)| b.max(t.abs()).max(o.abs()));
    let mut net = ReluNetwork::new(NetworkArch::new(1, 1, m, bound), 1, vec![w1, out], vec![v1])?;
    let mut arch = *net.arch();
    arch.sparsity = net.nonzeros().max(1);
    arch.clip = clip;
    net = net.with_arch(arch);
    Ok(net)
}

/// Knots of a ramp approximation of `1_{[t, ∞)}` rising on `[t - w, t]`.
pub fn step_ramp(t: f64, w: f64) -> [(f64, f64); 2] {
    [(t - w, 1.0 / w), (t, -1.0 / w)]
}

/// A box `Π [lo_i, hi_i)` with a coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBox {
    pub coef: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Two-hidden-layer network `Σ coef · ρ(Σ_i u_i(x_i) - (d - 1))`, where
/// `u_i` is the trapezoid rising on `[lo_i - w, lo_i]` and falling on
/// `[hi_i - w, hi_i]`. Each term approximates the box indicator and is exact
/// away from a `w`-neighbourhood of the box faces.
pub fn box_sum_network(
    boxes: &[WeightedBox],
    d: usize,
    w: f64,
    clip: Option<f64>,
) -> Result<ReluNetwork> {
    if d == 0 || !(w > 0.0) {
        return Err(invalid("need d >= 1 and w > 0"));
    }
    // Layer-1 neurons ρ(x_axis - t), deduplicated.
    let mut first: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    let mut first_list: Vec<(usize, f64)> = Vec::new();
    let mut neuron = |axis: usize, t: f64, first_list: &mut Vec<(usize, f64)>| -> usize {
        *first.entry((axis, t.to_bits())).or_insert_with(|| {
            first_list.push((axis, t));
            first_list.len() - 1
        })
    };
    let mut second: Vec<Vec<(usize, f64)>> = Vec::with_capacity(boxes.len());
    for bx in boxes {
        if bx.lo.len() != d || bx.hi.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: bx.lo.len(),
            });
        }
        let mut row = Vec::with_capacity(4 * d);
        for i in 0..d {
            for (t, s) in [
                (bx.lo[i] - w, 1.0),
                (bx.lo[i], -1.0),
                (bx.hi[i] - w, -1.0),
                (bx.hi[i], 1.0),
            ] {
                row.push((neuron(i, t, &mut first_list), s / w));
            }
        }
        second.push(row);
    }
    let m1 = first_list.len().max(1);
    let m2 = boxes.len().max(1);
    let mut w1 = Dense::zeros(m1, d);
    let mut v1 = vec![0.0; m1];
    for (j, (axis, t)) in first_list.iter().enumerate() {
        w1.set(j, *axis, 1.0);
        v1[j] = *t;
    }
    let mut w2 = Dense::zeros(m2, m1);
    let mut v2 = vec![0.0; m2];
    let mut out = Dense::zeros(1, m2);
    for (r, (row, bx)) in second.iter().zip(boxes).enumerate() {
        for (j, s) in row {
            let cur = w2.get(r, *j);
            w2.set(r, *j, cur + s);
        }
        v2[r] = (d - 1) as f64;
        out.set(0, r, bx.coef);
    }
    let width = m1.max(m2);
    let net = ReluNetwork::new(
        NetworkArch::new(2, 1, width, 1.0),
        d,
        vec![w1, w2, out],
        vec![v1, v2],
    )?;
    let mut arch = *net.arch();
    arch.sparsity = net.nonzeros().max(1);
    arch.bound = net.max_abs().max(1.0);
    arch.clip = clip;
    Ok(net.with_arch(arch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::affine::{AffineMap, BaseFunction};
    use crate::quad;
    use crate::relu_net::validate_arch;

    #[test]
    fn jump_plateau_and_floor() {
        let (j, h, w) = (0.5, 1.3, 0.01);
        let n = build_jump_approx(j, h, w).unwrap();
        assert!((n.forward_unchecked(&[j + w]) - h).abs() < 1e-12);
        assert_eq!(n.forward_unchecked(&[j - 2.0 * w]), 0.0);
        assert!(validate_arch(&n).valid);
        let deep = build_jump_approx_deep(j, -h, w).unwrap();
        assert!((deep.forward_unchecked(&[0.8]) + h).abs() < 1e-12);
        assert_eq!(deep.arch().sparsity, 13);
        assert!(validate_arch(&deep).valid);
    }

    #[test]
    fn jump_error_closed_form() {
        let (j, h, w) = (0.5, 2f64.sqrt(), 0.01);
        let n = build_jump_approx(j, h, w).unwrap();
        let e2 = quad::integrate_pieces(
            |t| {
                let target = if t >= j { h } else { 0.0 };
                (n.forward_unchecked(&[t]) - target).powi(2)
            },
            0.0,
            1.0,
            &[j - w, j],
        );
        assert!((e2.sqrt() - h * (w / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn formula_architecture() {
        let a = composed_arch(&NetworkArch::new(2, 20, 6, 5.0), 3, 1, 2.0);
        assert_eq!((a.depth, a.sparsity, a.width), (4, 105, 18));
        assert_eq!(a.bound, 5.0);
    }

    #[test]
    fn identity_composition_matches_sub() {
        let sub = build_jump_approx_deep(0.5, 2f64.sqrt(), 0.01).unwrap();
        let atom = AffineAtom::new(1.0, AffineMap::identity(1), BaseFunction::half_step()).unwrap();
        let net = compose_atoms(&sub, &[atom], 1.0).unwrap();
        assert!(validate_arch(&net).valid);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((net.forward_unchecked(&[x]) - sub.forward_unchecked(&[x])).abs() < 1e-10);
        }
    }

    #[test]
    fn ramp_spline_reproduces_step() {
        let mut ks = step_ramp(0.3, 0.01).to_vec();
        ks.extend(step_ramp(0.0, 0.01).iter().map(|(t, o)| (*t, 0.5 * o)));
        let n = ramp_spline(&ks, None).unwrap();
        assert!((n.forward_unchecked(&[0.1]) - 0.5).abs() < 1e-12);
        assert!((n.forward_unchecked(&[0.6]) - 1.5).abs() < 1e-12);
        assert!(validate_arch(&n).valid);
    }

    #[test]
    fn box_network_is_indicator_away_from_faces() {
        let bx = WeightedBox {
            coef: 2.0,
            lo: vec![0.25, 0.0],
            hi: vec![0.5, 0.5],
        };
        let n = box_sum_network(&[bx], 2, 0.01, None).unwrap();
        assert!((n.forward_unchecked(&[0.3, 0.2]) - 2.0).abs() < 1e-12);
        assert!(n.forward_unchecked(&[0.6, 0.2]).abs() < 1e-12);
        assert!(n.forward_unchecked(&[0.3, 0.7]).abs() < 1e-12);
        assert!(validate_arch(&n).valid);
    }
}
