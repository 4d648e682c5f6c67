use super::config::{EstimatorEntry, EstimatorSpec, ExperimentConfig, LambdaPolicy, RateClass};
use super::data::generate_data;
use super::rate::fit_rate;
use super::reference::{reference_exponent, reference_source};
use super::risk::estimate_l2_risk;
use super::seed::{derive_seed, rng_for, Stream};
use crate::classes::target::TargetFunction;
use crate::error::{Error, Result};
use crate::estimators::{
    default_lambda_grid, erm_deep_constructive, erm_deep_gd, kernel_ridge, kernel_ridge_cv,
    nadaraya_watson, wavelet_threshold, ClassHint, Dataset, EstimatorKind, FittedEstimator,
    GdConfig,
};
use crate::wavelets::DyadicWavelet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

/// Header of the per-cell CSV.
pub const CSV_COLUMNS: [&str; 6] = ["estimator", "n", "rep", "risk", "risk_se", "fit_seconds"];

/// Note attached to every measured slope.
pub const AVERAGE_CASE: &str = "average-case over the sampler";

/// One row of the per-cell CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub estimator: String,
    pub n: usize,
    pub rep: usize,
    pub risk: f64,
    pub risk_se: f64,
    pub fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub estimator: String,
    pub n: usize,
    pub rep: usize,
    pub error: String,
}

/// Replication summary at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub n: usize,
    pub mean_risk: f64,
    /// Standard error of `mean_risk` across replications.
    pub se: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub estimator: String,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub intercept: Option<f64>,
    pub reference_exponent: Option<f64>,
    pub reference_source: Option<String>,
    pub note: String,
    pub cells: Vec<AggregateCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<CellRecord>,
    pub failures: Vec<CellFailure>,
    pub reports: Vec<RateReport>,
}

/// Kind of estimator an entry produces.
pub fn entry_kind(spec: &EstimatorSpec) -> EstimatorKind {
    match spec {
        EstimatorSpec::Krr { .. } => EstimatorKind::Krr,
        EstimatorSpec::NadarayaWatson { .. } => EstimatorKind::NadarayaWatson,
        EstimatorSpec::WaveletThreshold { .. } => EstimatorKind::WaveletThreshold,
        EstimatorSpec::DeepConstructive { .. } => EstimatorKind::DeepConstructive,
        EstimatorSpec::DeepGd { .. } => EstimatorKind::DeepGd,
    }
}

/// Seed of the target sampler for `(n, rep)`.
pub fn target_seed(cfg: &ExperimentConfig, n: usize, rep: usize) -> u64 {
    if cfg.resample_target {
        derive_seed(
            cfg.master_seed,
            &[Stream::Target.key(), n as u64, rep as u64],
        )
    } else {
        cfg.target_seed
            .unwrap_or_else(|| derive_seed(cfg.master_seed, &[Stream::Target.key()]))
    }
}

/// `f°` used in cell `(n, rep)`.
pub fn cell_target(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<TargetFunction> {
    let seed = target_seed(cfg, n, rep);
    cfg.target.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Training data of cell `(n, rep)`, shared by all estimators.
pub fn cell_data(
    cfg: &ExperimentConfig,
    f: &TargetFunction,
    n: usize,
    rep: usize,
) -> Result<Dataset> {
    let path = [Stream::Data.key(), n as u64, rep as u64];
    generate_data(
        f,
        n,
        cfg.sigma,
        derive_seed(cfg.master_seed, &path),
        &mut rng_for(cfg.master_seed, &path),
    )
}

/// Fits one configured estimator.
pub fn fit_entry(
    spec: &EstimatorSpec,
    data: &Dataset,
    target: &TargetFunction,
    fit_seed: u64,
) -> Result<FittedEstimator> {
    let n = data.n();
    match spec {
        EstimatorSpec::Krr { kernel, lambda } => match lambda {
            LambdaPolicy::Fixed { value } => kernel_ridge(data, *kernel, *value),
            LambdaPolicy::Cv { grid, folds } => {
                let g = grid.clone().unwrap_or_else(default_lambda_grid);
                kernel_ridge_cv(data, *kernel, &g, *folds)
            }
        },
        EstimatorSpec::NadarayaWatson { window, bandwidth } => {
            nadaraya_watson(data, bandwidth.at(n), *window)
        }
        EstimatorSpec::WaveletThreshold { max_level, rule } => {
            let level = max_level.unwrap_or_else(|| (n.max(2).ilog2()).saturating_sub(1));
            wavelet_threshold(data, &DyadicWavelet::haar(data.d), level, *rule)
        }
        EstimatorSpec::DeepConstructive { hint, budget } => {
            let h = match hint {
                Some(h) => h.clone(),
                None => ClassHint::for_target(target)?,
            };
            erm_deep_constructive(data, &h, budget)
        }
        EstimatorSpec::DeepGd { arch, schedule } => {
            let cfg = GdConfig {
                epochs: schedule.epochs,
                step: schedule.step,
                seed: fit_seed,
                prune: schedule.prune,
            };
            erm_deep_gd(data, arch, &cfg)
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    n: usize,
    rep: usize,
) -> Vec<std::result::Result<CellRecord, CellFailure>> {
    let fail = |label: String, e: Error| CellFailure {
        estimator: label,
        n,
        rep,
        error: e.to_string(),
    };
    let setup = cell_target(cfg, n, rep).and_then(|f| cell_data(cfg, &f, n, rep).map(|d| (f, d)));
    let (f, data) = match setup {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            return cfg
                .estimators
                .iter()
                .map(|en| Err(fail(en.label(), Error::InvalidArgument(msg.clone()))))
                .collect();
        }
    };
    cfg.estimators
        .iter()
        .enumerate()
        .map(|(j, entry)| {
            let label = entry.label();
            let key = |s: Stream| [s.key(), n as u64, rep as u64, j as u64];
            let start = Instant::now();
            let est = fit_entry(
                &entry.spec,
                &data,
                &f,
                derive_seed(cfg.master_seed, &key(Stream::Fit)),
            )
            .map_err(|e| fail(label.clone(), e))?;
            let fit_seconds = if cfg.record_timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            let mut rng = rng_for(cfg.master_seed, &key(Stream::Risk));
            let r = estimate_l2_risk(&est, &f, cfg.risk.method, cfg.risk.mc_points, &mut rng)
                .map_err(|e| fail(label.clone(), e))?;
            Ok(CellRecord {
                estimator: label,
                n,
                rep,
                risk: r.risk,
                risk_se: r.se,
                fit_seconds,
            })
        })
        .collect()
}

/// Fits every estimator on every `(n, rep)` cell, then aggregates.
///
/// Cells run in parallel on the current rayon pool. Each cell draws its
/// randomness from seeds keyed by its own coordinates, and results are
/// collected in `(n, rep, estimator)` order, so the output does not depend on
/// the number of threads. Failed cells are logged and left out.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(n, rep)| run_cell(cfg, n, rep))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => {
                log::warn!(
                    "cell {} n={} rep={} failed: {}",
                    f.estimator,
                    f.n,
                    f.rep,
                    f.error
                );
                failures.push(f);
            }
        }
    }
    let reports = build_reports(cfg, &records);
    Ok(SweepResult {
        records,
        failures,
        reports,
    })
}

/// Mean and standard error at each `n` with at least one record.
pub fn aggregate(records: &[&CellRecord], grid: &[usize]) -> Vec<AggregateCell> {
    grid.iter()
        .filter_map(|&n| {
            let rs: Vec<&CellRecord> = records.iter().copied().filter(|r| r.n == n).collect();
            if rs.is_empty() {
                return None;
            }
            let m = rs.len() as f64;
            let mean = rs.iter().map(|r| r.risk).sum::<f64>() / m;
            let se = if rs.len() > 1 {
                let var = rs.iter().map(|r| (r.risk - mean).powi(2)).sum::<f64>() / (m - 1.0);
                (var / m).sqrt()
            } else {
                rs[0].risk_se
            };
            Some(AggregateCell {
                n,
                mean_risk: mean,
                se,
                replications: rs.len(),
            })
        })
        .collect()
}

/// Rate reports for each configured estimator, in configuration order.
pub fn build_reports(cfg: &ExperimentConfig, records: &[CellRecord]) -> Vec<RateReport> {
    let class = cfg.target.rate_class();
    cfg.estimators
        .iter()
        .map(|entry| report_for(entry, class, &cfg.n_grid, records))
        .collect()
}

fn report_for(
    entry: &EstimatorEntry,
    class: Option<RateClass>,
    grid: &[usize],
    records: &[CellRecord],
) -> RateReport {
    let label = entry.label();
    let mine: Vec<&CellRecord> = records.iter().filter(|r| r.estimator == label).collect();
    let cells = aggregate(&mine, grid);
    let pts: Vec<(f64, f64)> = cells.iter().map(|c| (c.n as f64, c.mean_risk)).collect();
    let fit = match fit_rate(&pts) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("no rate fit for {label}: {e}");
            None
        }
    };
    let kind = entry_kind(&entry.spec);
    RateReport {
        estimator: label,
        slope: fit.map(|f| f.slope),
        slope_se: fit.map(|f| f.slope_se),
        intercept: fit.map(|f| f.intercept),
        reference_exponent: class.map(|c| reference_exponent(kind, c)),
        reference_source: class.map(|c| reference_source(kind, c).to_string()),
        note: AVERAGE_CASE.into(),
        cells,
    }
}

pub fn write_csv<W: Write>(w: W, records: &[CellRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<CellRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::InvalidArgument(format!(
            "unexpected CSV header {headers:?}"
        )));
    }
    rd.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Writes CSV, JSON reports and SVG plot into `dir` under the configured names.
pub fn write_outputs(cfg: &ExperimentConfig, result: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(
        std::fs::File::create(dir.join(&cfg.output.csv))?,
        &result.records,
    )?;
    std::fs::write(
        dir.join(&cfg.output.report),
        serde_json::to_string_pretty(&result.reports)? + "\n",
    )?;
    let curves = cfg
        .target
        .rate_class()
        .map(|c| super::reference::reference_curves(c, &cfg.n_grid))
        .unwrap_or_default();
    std::fs::write(
        dir.join(&cfg.output.plot),
        super::plot::render_svg(&result.reports, &curves),
    )?;
    Ok(())
}
