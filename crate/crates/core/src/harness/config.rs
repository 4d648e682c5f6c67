//! Experiment configuration, read from JSON.

use crate::classes::affine::{BaseFunction, Profile};
use crate::classes::target::{sample_i0, sample_jk, TargetClass, TargetFunction};
use crate::error::{invalid, Result};
use crate::estimators::{ClassHint, DeepBudget, Kernel, ThresholdRule, Window};
use crate::relu_net::NetworkArch;
use crate::wavelets::{sample_jp, sample_kp, DyadicWavelet};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How `f°` is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TargetSpec {
    Jk {
        k: usize,
        c: f64,
    },
    I0 {
        n_s: usize,
        c: f64,
        #[serde(default = "one")]
        d: usize,
        /// Base functions; defaults to the tensor half step.
        #[serde(default)]
        phi: Option<Vec<BaseFunction>>,
    },
    Jp {
        p: f64,
        c1: f64,
        c2: f64,
        beta: f64,
        max_level: u32,
        #[serde(default = "one")]
        d: usize,
    },
    Kp {
        n_s: usize,
        p: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        beta: f64,
        max_level: u32,
        #[serde(default = "one")]
        d: usize,
    },
    /// A fixed function given inline.
    Fixed {
        function: TargetFunction,
    },
}

fn one() -> usize {
    1
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::Jk { .. } => 1,
            TargetSpec::I0 { d, .. } | TargetSpec::Jp { d, .. } | TargetSpec::Kp { d, .. } => *d,
            TargetSpec::Fixed { function } => function.dim(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TargetFunction> {
        match self {
            TargetSpec::Jk { k, c } => sample_jk(*k, *c, rng),
            TargetSpec::I0 { n_s, c, d, phi } => {
                let set = match phi {
                    Some(p) => p.clone(),
                    None => vec![BaseFunction::new(
                        "half_step",
                        vec![Profile::Step { jump: 0.5 }; *d],
                    )?],
                };
                sample_i0(*n_s, *c, &set, rng)
            }
            TargetSpec::Jp {
                p,
                c1,
                c2,
                beta,
                max_level,
                d,
            } => {
                let e = sample_jp(
                    &DyadicWavelet::haar(*d),
                    *p,
                    *c1,
                    *c2,
                    *beta,
                    *max_level,
                    rng,
                )?;
                Ok(TargetFunction::from_expansion(e))
            }
            TargetSpec::Kp {
                n_s,
                p,
                c1,
                c2,
                c3,
                beta,
                max_level,
                d,
            } => sample_kp(
                &[DyadicWavelet::haar(*d)],
                *n_s,
                *p,
                *c1,
                *c2,
                *c3,
                *beta,
                *max_level,
                rng,
            ),
            TargetSpec::Fixed { function } => Ok(function.clone()),
        }
    }

    /// Rate regime of the class, if known.
    pub fn rate_class(&self) -> Option<RateClass> {
        match self {
            TargetSpec::Jk { .. } => Some(RateClass::Jumps),
            TargetSpec::I0 { .. } => Some(RateClass::Jumps),
            TargetSpec::Jp { p, beta, .. } | TargetSpec::Kp { p, beta, .. } => {
                Some(RateClass::Wavelet { p: *p, beta: *beta })
            }
            TargetSpec::Fixed { function } => match &function.class {
                TargetClass::Jk { .. } | TargetClass::I0 { .. } => Some(RateClass::Jumps),
                TargetClass::Jp { expansion } => expansion.bounds().map(|b| RateClass::Wavelet {
                    p: b.p,
                    beta: b.beta,
                }),
                TargetClass::Kp { sum } => Some(RateClass::Wavelet {
                    p: sum.bounds.p,
                    beta: sum.bounds.beta,
                }),
                TargetClass::Custom { .. } => None,
            },
        }
    }
}

/// Which family of reference rates applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateClass {
    /// Piecewise constant targets (`J_k` and `ℓ⁰`-bounded affine sums).
    Jumps,
    /// Weak-ℓᵖ wavelet targets with tail exponent `β`.
    Wavelet { p: f64, beta: f64 },
}

/// `λ` for kernel ridge regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed {
        value: f64,
    },
    /// `folds`-fold cross-validation over `grid` (default `10^{-4}..10^3`).
    Cv {
        #[serde(default)]
        grid: Option<Vec<f64>>,
        #[serde(default = "five")]
        folds: usize,
    },
}

fn five() -> usize {
    5
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        LambdaPolicy::Cv {
            grid: None,
            folds: 5,
        }
    }
}

/// `h = scale · n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPolicy {
    pub scale: f64,
    pub exponent: f64,
}

impl BandwidthPolicy {
    pub fn at(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdSchedule {
    pub epochs: usize,
    pub step: f64,
    #[serde(default)]
    pub prune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Krr {
        kernel: Kernel,
        #[serde(default)]
        lambda: LambdaPolicy,
    },
    NadarayaWatson {
        window: Window,
        bandwidth: BandwidthPolicy,
    },
    WaveletThreshold {
        /// Defaults to `⌊log₂ n⌋ - 1`.
        #[serde(default)]
        max_level: Option<u32>,
        #[serde(default = "universal")]
        rule: ThresholdRule,
    },
    DeepConstructive {
        /// Defaults to the hint implied by the target's class.
        #[serde(default)]
        hint: Option<ClassHint>,
        #[serde(default)]
        budget: DeepBudget,
    },
    DeepGd {
        arch: NetworkArch,
        schedule: GdSchedule,
    },
}

fn universal() -> ThresholdRule {
    ThresholdRule::Universal { sigma: None }
}

impl EstimatorSpec {
    pub fn default_label(&self) -> &'static str {
        match self {
            EstimatorSpec::Krr { .. } => "krr",
            EstimatorSpec::NadarayaWatson { .. } => "nadaraya_watson",
            EstimatorSpec::WaveletThreshold { .. } => "wavelet_threshold",
            EstimatorSpec::DeepConstructive { .. } => "deep_constructive",
            EstimatorSpec::DeepGd { .. } => "deep_gd",
        }
    }

    /// Estimators linear in `Y` are compared against the linear lower rate.
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            EstimatorSpec::Krr { .. } | EstimatorSpec::NadarayaWatson { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorEntry {
    /// Name used in the outputs; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: EstimatorSpec,
}

impl EstimatorEntry {
    pub fn new(spec: EstimatorSpec) -> Self {
        Self { label: None, spec }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.spec.default_label().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    /// Exact quadrature in `d = 1` when both functions have known breakpoints,
    /// Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    #[serde(default)]
    pub method: RiskMethod,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
}

fn default_mc_points() -> usize {
    100_000
}

impl Default for RiskSpec {
    fn default() -> Self {
        Self {
            method: RiskMethod::Auto,
            mc_points: default_mc_points(),
        }
    }
}

/// File names inside the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_plot")]
    pub plot: String,
}

fn default_csv() -> String {
    "risks.csv".into()
}

fn default_report() -> String {
    "rates.json".into()
}

fn default_plot() -> String {
    "rates.svg".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            csv: default_csv(),
            report: default_report(),
            plot: default_plot(),
        }
    }
}

pub fn default_n_grid() -> Vec<usize> {
    (7..=13).map(|k| 1usize << k).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    /// Seed of the target sampler; defaults to one derived from `master_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_seed: Option<u64>,
    /// Draw a fresh `f°` for every `(n, rep)` instead of one per run.
    #[serde(default)]
    pub resample_target: bool,
    pub estimators: Vec<EstimatorEntry>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub sigma: f64,
    #[serde(default)]
    pub risk: RiskSpec,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    /// Write wall-clock fit times; off by default so outputs are reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(invalid("the n grid must be nonempty with n >= 1"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(format!(
                "the n grid must be strictly increasing, got {:?}",
                self.n_grid
            )));
        }
        if self.replications == 0 {
            return Err(invalid("need at least one replication"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators configured"));
        }
        let mut labels: Vec<String> = self.estimators.iter().map(EstimatorEntry::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("estimator labels must be distinct"));
        }
        if self.risk.mc_points < 2 {
            return Err(invalid("need at least two Monte-Carlo points"));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_json(
            r#"{"target": {"class": "jk", "k": 3, "c": 2.0},
                "estimators": [{"kind": "krr", "kernel": {"type": "laplace", "lengthscale": 0.2}},
                               {"kind": "deep_constructive"}],
                "replications": 2, "sigma": 0.5}"#,
        )
        .unwrap();
        assert_eq!(cfg.n_grid, vec![128, 256, 512, 1024, 2048, 4096, 8192]);
        assert_eq!(cfg.estimators[0].label(), "krr");
        assert_eq!(
            cfg.estimators[0].spec,
            EstimatorSpec::Krr {
                kernel: Kernel::Laplace { lengthscale: 0.2 },
                lambda: LambdaPolicy::default()
            }
        );
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_grid() {
        let s = r#"{"target": {"class": "jk", "k": 1, "c": 1.0}, "estimators": [{"kind": "deep_constructive"}],
                    "n_grid": [64, 32, 128, 256], "replications": 1, "sigma": 0.1}"#;
        assert!(ExperimentConfig::from_json(s).is_err());
    }
}
