use crate::error::{invalid, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Current JSON format version for networks.
pub const NETWORK_FORMAT_VERSION: u32 = 1;

/// Architecture descriptor of `𝒩(L, S, D, B)` and, with `clip`, `𝒩_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkArch {
    /// Number of hidden layers `L`.
    pub depth: usize,
    /// Budget `S` on nonzero weights and biases.
    pub sparsity: usize,
    /// Width `D`.
    pub width: usize,
    /// Magnitude bound `B ≥ 1`.
    pub bound: f64,
    /// Output clip level `F`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
}

impl NetworkArch {
    pub fn new(depth: usize, sparsity: usize, width: usize, bound: f64) -> Self {
        Self {
            depth,
            sparsity,
            width,
            bound,
            clip: None,
        }
    }

    pub fn with_clip(mut self, f: f64) -> Self {
        self.clip = Some(f);
        self
    }

    /// Checks `L ≥ 1, S ≥ 1, B ≥ 1, D ≥ d`.
    pub fn check(&self, input_dim: usize) -> Result<()> {
        if self.depth < 1 || self.sparsity < 1 {
            return Err(invalid(format!(
                "need L, S >= 1 (got L = {}, S = {})",
                self.depth, self.sparsity
            )));
        }
        if !(self.bound >= 1.0) {
            return Err(invalid(format!("need B >= 1, got {}", self.bound)));
        }
        if self.width < input_dim {
            return Err(invalid(format!(
                "width {} is below the input dimension {input_dim}",
                self.width
            )));
        }
        if let Some(f) = self.clip {
            if !(f > 0.0) {
                return Err(invalid(format!("clip level must be positive, got {f}")));
            }
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(invalid("ragged matrix rows"));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// `x ↦ W_{L+1} ρ(W_L ⋯ ρ(W_1 x - v_1) ⋯ - v_L)`, optionally clipped.
///
/// Hidden widths may differ from layer to layer as long as each is at most
/// `D`; a narrower layer is the same as a width-`D` layer padded with zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNetwork {
    arch: NetworkArch,
    input_dim: usize,
    weights: Vec<Dense>,
    biases: Vec<Vec<f64>>,
}

impl ReluNetwork {
    /// Checks shapes only; use [`validate_arch`] for the class constraints.
    pub fn new(
        arch: NetworkArch,
        input_dim: usize,
        weights: Vec<Dense>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        if weights.is_empty() || biases.len() + 1 != weights.len() {
            return Err(invalid(format!(
                "{} weight matrices need {} bias vectors, got {}",
                weights.len(),
                weights.len().saturating_sub(1),
                biases.len()
            )));
        }
        let mut cols = input_dim;
        for (i, w) in weights.iter().enumerate() {
            if w.cols != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: w.cols,
                });
            }
            if w.data.len() != w.rows * w.cols {
                return Err(invalid(format!(
                    "layer {} storage does not match its shape",
                    i + 1
                )));
            }
            if let Some(b) = biases.get(i) {
                if b.len() != w.rows {
                    return Err(Error::Dimension {
                        expected: w.rows,
                        got: b.len(),
                    });
                }
            }
            cols = w.rows;
        }
        if cols != 1 {
            return Err(invalid(format!(
                "output layer must have one row, got {cols}"
            )));
        }
        Ok(Self {
            arch,
            input_dim,
            weights,
            biases,
        })
    }

    /// The all-zero network of the given architecture (hidden width `D`).
    pub fn zero(arch: NetworkArch, input_dim: usize) -> Self {
        let d = arch.width.max(1);
        let mut weights = vec![Dense::zeros(d, input_dim)];
        let mut biases = vec![vec![0.0; d]];
        for _ in 1..arch.depth.max(1) {
            weights.push(Dense::zeros(d, d));
            biases.push(vec![0.0; d]);
        }
        weights.push(Dense::zeros(1, d));
        Self {
            arch,
            input_dim,
            weights,
            biases,
        }
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `W_1, …, W_{L+1}`.
    pub fn weights(&self) -> &[Dense] {
        &self.weights
    }

    /// `v_1, …, v_L`.
    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Dense], &mut [Vec<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    pub fn hidden_layers(&self) -> usize {
        self.biases.len()
    }

    pub fn with_arch(mut self, arch: NetworkArch) -> Self {
        self.arch = arch;
        self
    }

    pub fn with_clip(mut self, f: Option<f64>) -> Self {
        self.arch.clip = f;
        self
    }

    /// Number of nonzero weights and biases.
    pub fn nonzeros(&self) -> usize {
        self.weights.iter().map(Dense::nonzeros).sum::<usize>()
            + self.biases.iter().flatten().filter(|v| **v != 0.0).count()
    }

    /// Largest absolute weight or bias.
    pub fn max_abs(&self) -> f64 {
        let w = self.weights.iter().map(Dense::max_abs).fold(0.0, f64::max);
        self.biases.iter().flatten().fold(w, |m, v| m.max(v.abs()))
    }

    /// Output before clipping; `x` must have length `input_dim`.
    pub fn forward_raw(&self, x: &[f64]) -> f64 {
        let mut h: Vec<f64> = x.to_vec();
        let mut next = Vec::new();
        for (w, v) in self.weights.iter().zip(&self.biases) {
            next.clear();
            next.extend((0..w.rows).map(|i| {
                let s: f64 = w.row(i).iter().zip(&h).map(|(a, b)| a * b).sum();
                (s - v[i]).max(0.0)
            }));
            std::mem::swap(&mut h, &mut next);
        }
        let out = self.weights.last().expect("at least one layer");
        out.row(0).iter().zip(&h).map(|(a, b)| a * b).sum()
    }

    /// Forward pass with the architecture's clip applied.
    pub fn forward_unchecked(&self, x: &[f64]) -> f64 {
        clip(self.forward_raw(x), self.arch.clip)
    }

    /// Evaluates `(x ↦ ⋯)` batch-parallel over rows of `xs` (row-major, `n × d`).
    /// Results do not depend on how rows are split across threads.
    pub fn forward_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim;
        if !xs.len().is_multiple_of(d) {
            return Err(Error::Dimension {
                expected: d,
                got: xs.len() % d,
            });
        }
        Ok(xs
            .par_chunks(d)
            .map(|x| self.forward_unchecked(x))
            .collect())
    }

    /// Scales the output layer by `lambda`.
    pub fn scale_output(&mut self, lambda: f64) {
        if let Some(w) = self.weights.last_mut() {
            w.data.iter_mut().for_each(|v| *v *= lambda);
        }
    }
}

/// `sgn(f) min{|f|, F}`.
pub fn clip(v: f64, f: Option<f64>) -> f64 {
    match f {
        Some(f) => v.clamp(-f, f),
        None => v,
    }
}

/// Exact forward pass; fails on a shape mismatch.
pub fn forward(net: &ReluNetwork, x: &[f64]) -> Result<f64> {
    if x.len() != net.input_dim {
        return Err(Error::Dimension {
            expected: net.input_dim,
            got: x.len(),
        });
    }
    Ok(net.forward_unchecked(x))
}

/// One failed constraint of [`validate_arch`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Violation {
    Depth {
        expected: usize,
        got: usize,
    },
    InputWidth {
        input_dim: usize,
        width: usize,
    },
    LayerWidth {
        layer: usize,
        width: usize,
        limit: usize,
    },
    WeightMagnitude {
        layer: usize,
        row: usize,
        col: usize,
        value: f64,
        bound: f64,
    },
    BiasMagnitude {
        layer: usize,
        index: usize,
        value: f64,
        bound: f64,
    },
    Sparsity {
        nonzeros: usize,
        budget: usize,
    },
    Descriptor {
        message: String,
    },
}

/// Outcome of [`validate_arch`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchReport {
    pub valid: bool,
    pub nonzeros: usize,
    pub violations: Vec<Violation>,
}

/// Checks depth, widths, magnitudes and sparsity against the network's
/// architecture descriptor and reports every violation.
pub fn validate_arch(net: &ReluNetwork) -> ArchReport {
    validate_against(net, &net.arch)
}

/// As [`validate_arch`], against an explicit descriptor.
pub fn validate_against(net: &ReluNetwork, arch: &NetworkArch) -> ArchReport {
    let mut v = Vec::new();
    if let Err(e) = arch.check(0) {
        v.push(Violation::Descriptor {
            message: e.to_string(),
        });
    }
    if net.hidden_layers() != arch.depth {
        v.push(Violation::Depth {
            expected: arch.depth,
            got: net.hidden_layers(),
        });
    }
    if arch.width < net.input_dim {
        v.push(Violation::InputWidth {
            input_dim: net.input_dim,
            width: arch.width,
        });
    }
    let b = arch.bound;
    for (li, w) in net.weights.iter().enumerate() {
        if li < net.hidden_layers() && w.rows > arch.width {
            v.push(Violation::LayerWidth {
                layer: li + 1,
                width: w.rows,
                limit: arch.width,
            });
        }
        for r in 0..w.rows {
            for c in 0..w.cols {
                let x = w.get(r, c);
                if !(x.abs() <= b) {
                    v.push(Violation::WeightMagnitude {
                        layer: li + 1,
                        row: r,
                        col: c,
                        value: x,
                        bound: b,
                    });
                }
            }
        }
    }
    for (li, bias) in net.biases.iter().enumerate() {
        for (i, x) in bias.iter().enumerate() {
            if !(x.abs() <= b) {
                v.push(Violation::BiasMagnitude {
                    layer: li + 1,
                    index: i,
                    value: *x,
                    bound: b,
                });
            }
        }
    }
    let nz = net.nonzeros();
    if nz > arch.sparsity {
        v.push(Violation::Sparsity {
            nonzeros: nz,
            budget: arch.sparsity,
        });
    }
    ArchReport {
        valid: v.is_empty(),
        nonzeros: nz,
        violations: v,
    }
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    weights: Vec<Vec<f64>>,
    mask: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias_mask: Option<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    version: u32,
    arch: NetworkArch,
    input_dim: usize,
    layers: Vec<RawLayer>,
}

fn mask_of(v: &[f64]) -> Vec<u8> {
    v.iter().map(|x| u8::from(*x != 0.0)).collect()
}

impl Serialize for ReluNetwork {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let layers = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| RawLayer {
                weights: w.to_rows(),
                mask: (0..w.rows).map(|r| mask_of(w.row(r))).collect(),
                bias: self.biases.get(i).cloned(),
                bias_mask: self.biases.get(i).map(|b| mask_of(b)),
            })
            .collect();
        RawNetwork {
            version: NETWORK_FORMAT_VERSION,
            arch: self.arch,
            input_dim: self.input_dim,
            layers,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReluNetwork {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawNetwork::deserialize(d)?;
        let conv = || -> Result<ReluNetwork> {
            if raw.version != NETWORK_FORMAT_VERSION {
                return Err(invalid(format!(
                    "unsupported network format version {}",
                    raw.version
                )));
            }
            let n = raw.layers.len();
            let mut weights = Vec::with_capacity(n);
            let mut biases = Vec::with_capacity(n.saturating_sub(1));
            for (i, l) in raw.layers.into_iter().enumerate() {
                let w = Dense::from_rows(&l.weights)?;
                let m: Vec<Vec<u8>> = (0..w.rows).map(|r| mask_of(w.row(r))).collect();
                if m != l.mask {
                    return Err(invalid(format!(
                        "layer {} mask disagrees with its weights",
                        i + 1
                    )));
                }
                weights.push(w);
                if i + 1 < n {
                    let b = l
                        .bias
                        .ok_or_else(|| invalid(format!("hidden layer {} has no bias", i + 1)))?;
                    if l.bias_mask
                        .as_deref()
                        .is_some_and(|bm| bm != mask_of(&b).as_slice())
                    {
                        return Err(invalid(format!(
                            "layer {} bias mask disagrees with its bias",
                            i + 1
                        )));
                    }
                    biases.push(b);
                } else if l.bias.is_some() {
                    return Err(invalid("the output layer has no bias"));
                }
            }
            ReluNetwork::new(raw.arch, raw.input_dim, weights, biases)
        };
        conv().map_err(serde::de::Error::custom)
    }
}
