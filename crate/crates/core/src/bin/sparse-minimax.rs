use clap::{Args, Parser, Subcommand};
use sparse_minimax::diagnostics::{cover_entropy_at, run_check, CheckReport, CHECK_NAMES};
use sparse_minimax::harness::reference::alpha;
use sparse_minimax::harness::{
    build_reports, cell_data, cell_target, read_csv, reference_curves, render_svg, run_sweep,
    write_outputs, ExperimentConfig, RateClass, RateReport,
};
use sparse_minimax::relu_net::{covering_entropy_bound, shared_entropy_bound, NetworkArch};
use sparse_minimax::{Error, Result};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sparse-minimax",
    version,
    about = "Minimax-rate experiments for sparse regression"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the target and write it with every training set.
    Gen,
    /// Run the sweep and write CSV, rate reports and plot.
    Run,
    /// Recompute rate reports from an existing CSV.
    Rates {
        /// CSV to read; defaults to the configured name inside `--out-dir`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run diagnostic checks, one JSON report per line.
    Verify {
        #[arg(long)]
        check: Option<String>,
    },
    /// Covering-entropy bounds for a sparse ReLU class.
    Entropy {
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        sparsity: usize,
        #[arg(long)]
        width: usize,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        #[arg(long)]
        delta: f64,
        /// Size `N` of a shared family.
        #[arg(long)]
        share: Option<usize>,
        /// Input dimension of the shared family.
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Redraw the plot from a rates JSON file.
    Plot {
        #[arg(long)]
        rates: Option<PathBuf>,
    },
}

fn load(global: &Global) -> Result<ExperimentConfig> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(s) = global.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn gen(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let data_dir = dir.join("data");
    std::fs::create_dir_all(&data_dir)?;
    let mut targets = 0;
    for &n in &cfg.n_grid {
        for rep in 0..cfg.replications {
            let f = cell_target(cfg, n, rep)?;
            if cfg.resample_target {
                std::fs::write(
                    data_dir.join(format!("target_n{n}_r{rep}.json")),
                    serde_json::to_string_pretty(&f)?,
                )?;
            } else if targets == 0 {
                std::fs::write(
                    dir.join("target.json"),
                    serde_json::to_string_pretty(&f)? + "\n",
                )?;
            }
            targets += 1;
            let data = cell_data(cfg, &f, n, rep)?;
            let mut w = csv::Writer::from_path(data_dir.join(format!("n{n}_r{rep}.csv")))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mut header: Vec<String> = (1..=data.d).map(|j| format!("x{j}")).collect();
            header.push("y".into());
            w.write_record(&header)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            for i in 0..data.n() {
                let mut row: Vec<String> = data.x(i).iter().map(|v| v.to_string()).collect();
                row.push(data.ys[i].to_string());
                w.write_record(&row)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    eprintln!("wrote {targets} datasets to {}", data_dir.display());
    Ok(())
}

fn print_reports(reports: &[RateReport]) {
    for r in reports {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |s| format!("{s:.3}"));
        eprintln!(
            "{:24} slope {} ± {}  reference {}",
            r.estimator,
            fmt(r.slope),
            fmt(r.slope_se),
            fmt(r.reference_exponent)
        );
    }
}

fn write_plot(cfg: &ExperimentConfig, reports: &[RateReport], dir: &Path) -> Result<()> {
    let curves = cfg
        .target
        .rate_class()
        .map(|c| reference_curves(c, &cfg.n_grid))
        .unwrap_or_default();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(&cfg.output.plot), render_svg(reports, &curves))?;
    Ok(())
}

fn verify(global: &Global, check: Option<&str>) -> Result<bool> {
    let seed = match (&global.config, global.seed) {
        (_, Some(s)) => s,
        (Some(_), None) => load(global)?.master_seed,
        (None, None) => 0,
    };
    let names: Vec<&str> = match check {
        Some(c) => vec![c],
        None => CHECK_NAMES.to_vec(),
    };
    let mut all = true;
    let mut out = std::io::stdout().lock();
    for name in names {
        let report: CheckReport = run_check(name, seed)?;
        all &= report.passed || report.exploratory;
        writeln!(out, "{}", serde_json::to_string(&report)?)?;
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Gen => gen(&load(g)?, &g.out_dir)?,
        Command::Run => {
            let cfg = load(g)?;
            let result = run_sweep(&cfg)?;
            write_outputs(&cfg, &result, &g.out_dir)?;
            print_reports(&result.reports);
            if !result.failures.is_empty() {
                eprintln!("{} cells failed", result.failures.len());
                return Ok(false);
            }
        }
        Command::Rates { csv } => {
            let cfg = load(g)?;
            let path = csv.unwrap_or_else(|| g.out_dir.join(&cfg.output.csv));
            let records = read_csv(std::fs::File::open(path)?)?;
            let reports = build_reports(&cfg, &records);
            std::fs::create_dir_all(&g.out_dir)?;
            std::fs::write(
                g.out_dir.join(&cfg.output.report),
                serde_json::to_string_pretty(&reports)? + "\n",
            )?;
            print_reports(&reports);
        }
        Command::Verify { ref check } => return verify(g, check.as_deref()),
        Command::Entropy {
            depth,
            sparsity,
            width,
            bound,
            delta,
            share,
            dim,
        } => {
            let arch = NetworkArch::new(depth, sparsity, width, bound);
            let mut v = serde_json::json!({
                "arch": arch,
                "delta": delta,
                "covering": covering_entropy_bound(&arch, delta)?,
            });
            if let Some(n) = share {
                v["shared"] = shared_entropy_bound(&arch, n, dim, delta)?.into();
            }
            if let Ok(cfg) = load(g) {
                if let Some(RateClass::Wavelet { p, beta }) = cfg.target.rate_class() {
                    if let Ok(q) = cover_entropy_at(delta, 1.0, alpha(p), beta) {
                        v["quantized_cover"] = q.into();
                    }
                }
            }
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Plot { rates } => {
            let cfg = load(g)?;
            let path = rates.unwrap_or_else(|| g.out_dir.join(&cfg.output.report));
            let reports: Vec<RateReport> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            write_plot(&cfg, &reports, &g.out_dir)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
