//! Acceptance criteria 1-11, one pass/fail line each.
//!
//! Everything runs inside a single test so the timings are not distorted by
//! other tests sharing the machine. Run with `--nocapture` to see the lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_minimax::classes::{
    sample_affine_map, weak_lp_norm, weak_lp_norm_values, AffineAtom, BaseFunction, CoeffSeq,
};
use sparse_minimax::diagnostics::run_check;
use sparse_minimax::harness::{run_sweep, write_outputs, ExperimentConfig};
use sparse_minimax::quad;
use sparse_minimax::relu_net::{
    build_jump_approx, build_jump_approx_deep, compose_atoms, composed_arch,
    covering_entropy_bound, shared_entropy_bound, validate_against, validate_arch, NetworkArch,
};
use sparse_minimax::wavelets::{gram_matrix, DyadicWavelet};
use std::time::{Duration, Instant};

const JUMPS: &str = include_str!("../../../configs/jumps.json");
const WAVELET: &str = include_str!("../../../configs/wavelet.json");

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn criterion(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let dt = t.elapsed();
    let ok = o.passed && dt <= limit;
    println!(
        "criterion {id:>2} {name:<28} {} ({:.1}s, limit {}s) {}",
        if ok { "PASS" } else { "FAIL" },
        dt.as_secs_f64(),
        limit.as_secs(),
        o.detail
    );
    ok
}

fn max_identity_error(g: &[f64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[i * n + j] - e).abs());
        }
    }
    worst
}

fn haar_orthonormality() -> Outcome {
    let (idx1, g1) = gram_matrix(&DyadicWavelet::haar(1), 5).unwrap();
    let (idx2, g2) = gram_matrix(&DyadicWavelet::haar(2), 3).unwrap();
    let e1 = max_identity_error(&g1, idx1.len());
    let e2 = max_identity_error(&g2, idx2.len());
    outcome(
        e1 <= 1e-10 && e2 <= 1e-10,
        format!(
            "d=1: {} functions, err {e1:.1e}; d=2: {} functions, err {e2:.1e}",
            idx1.len(),
            idx2.len()
        ),
    )
}

// Independent oracle: the rank of |a_i| is the number of entries at least as large.
fn weak_lp_oracle(v: &[f64], p: f64) -> f64 {
    let mags: Vec<f64> = v.iter().map(|a| a.abs()).filter(|a| *a > 0.0).collect();
    let mut best: f64 = 0.0;
    for &a in &mags {
        let rank = mags.iter().filter(|&&b| b >= a).count();
        best = best.max((rank as f64).powf(1.0 / p) * a);
    }
    best
}

fn weak_lp_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let len = rng.random_range(0..60);
        let pairs: Vec<(usize, f64)> = (0..len)
            .map(|_| {
                let i = rng.random_range(0..500usize);
                // a few exact ties and zeros
                let v = match rng.random_range(0..10) {
                    0 => 0.0,
                    1 => 0.5,
                    _ => rng.random_range(-3.0..3.0),
                };
                (i, v)
            })
            .collect();
        let seq: CoeffSeq<usize> = pairs.into_iter().collect();
        let values: Vec<f64> = seq.values().collect();
        for p in [0.5, 1.0, 1.5] {
            let got = weak_lp_norm(&seq, p).unwrap();
            if got != weak_lp_oracle(&values, p)
                || got != weak_lp_norm_values(values.clone(), p).unwrap()
            {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over 3000 comparisons"),
    )
}

fn composition_bound() -> Outcome {
    let c = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio: f64 = 0.0;
    let mut arch_ok = true;
    for eps in [1e-2, 1e-3] {
        // whole-line L² error of the ramped √2·1_{[1/2,1]} is √2·√(2w/3)
        let w = 0.75 * eps * eps;
        let sub = build_jump_approx_deep(0.5, 2f64.sqrt(), w).unwrap();
        for n_s in 1..=4 {
            let atoms: Vec<AffineAtom> = (0..n_s)
                .map(|_| {
                    let map = sample_affine_map(1, c, &mut rng, 1000).unwrap();
                    AffineAtom::new(rng.random_range(-c..=c), map, BaseFunction::half_step())
                        .unwrap()
                })
                .collect();
            let net = compose_atoms(&sub, &atoms, c).unwrap();
            let formula = composed_arch(sub.arch(), n_s, 1, c);
            arch_ok &= formula.depth == 4
                && validate_arch(&net).valid
                && validate_against(&net, &formula).valid;
            let mut breaks = Vec::new();
            for a in &atoms {
                breaks.extend(a.breakpoints_1d());
                breaks.extend(a.map.preimages_1d(&[0.5 - w, 0.5, 1.0, 1.0 + w]));
            }
            let e2 = quad::integrate_pieces(
                |x| {
                    let truth: f64 = atoms.iter().map(|a| a.eval(&[x])).sum();
                    (net.forward_unchecked(&[x]) - truth).powi(2)
                },
                0.0,
                1.0,
                &breaks,
            );
            let bound = c.powf(1.5) * n_s as f64 * eps;
            worst_ratio = worst_ratio.max(e2.sqrt() / bound);
        }
    }
    outcome(
        worst_ratio <= 1.0 && arch_ok,
        format!("largest error / bound {worst_ratio:.3}; architecture matches formula: {arch_ok}"),
    )
}

fn strictly_monotone(v: &[f64], increasing: bool) -> bool {
    v.windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn entropy_calculators() -> Outcome {
    let base = NetworkArch::new(2, 10, 4, 1.0);
    let cov = covering_entropy_bound(&base, 0.1).unwrap();
    let sh = shared_entropy_bound(&base, 2, 1, 0.1).unwrap();
    let e_cov = (cov - 60.0 * 150f64.ln()).abs();
    let e_sh = (sh - 340.0 * 300f64.ln()).abs();
    let arch = |l: usize, s: usize, d: usize, b: f64| NetworkArch::new(l, s, d, b);
    let cv = |a: NetworkArch, delta: f64| covering_entropy_bound(&a, delta).unwrap();
    let sv = |a: NetworkArch, n: usize, d: usize, delta: f64| {
        shared_entropy_bound(&a, n, d, delta).unwrap()
    };
    let five = [1usize, 2, 3, 4, 5];
    let sweeps = [
        strictly_monotone(&five.map(|k| cv(arch(k + 1, 10, 4, 1.0), 0.1)), true),
        strictly_monotone(&five.map(|k| cv(arch(2, 5 * k, 4, 1.0), 0.1)), true),
        strictly_monotone(&five.map(|k| cv(arch(2, 10, 2 * k, 1.0), 0.1)), true),
        strictly_monotone(&five.map(|k| cv(arch(2, 10, 4, k as f64), 0.1)), true),
        strictly_monotone(&five.map(|k| cv(base, 0.05 * k as f64)), false),
        strictly_monotone(&five.map(|k| sv(arch(k + 1, 10, 4, 1.0), 2, 1, 0.1)), true),
        strictly_monotone(&five.map(|k| sv(arch(2, 5 * k, 4, 1.0), 2, 1, 0.1)), true),
        strictly_monotone(&five.map(|k| sv(arch(2, 10, 2 * k, 1.0), 2, 1, 0.1)), true),
        strictly_monotone(&five.map(|k| sv(arch(2, 10, 4, k as f64), 2, 1, 0.1)), true),
        strictly_monotone(&five.map(|k| sv(base, 2, 1, 0.05 * k as f64)), false),
        strictly_monotone(&five.map(|k| sv(base, k, 1, 0.1)), true),
        strictly_monotone(&five.map(|k| sv(base, 2, k, 0.1)), true),
    ];
    let mono = sweeps.iter().filter(|b| **b).count();
    outcome(
        e_cov <= 1e-9 && e_sh <= 1e-9 && mono == sweeps.len(),
        format!(
            "errors {e_cov:.1e}, {e_sh:.1e}; {mono}/{} sweeps strictly monotone",
            sweeps.len()
        ),
    )
}

fn jump_certificate() -> Outcome {
    let (j, h) = (0.5, 1.7);
    let mut worst: f64 = 0.0;
    for w in [1e-1, 1e-2, 1e-3] {
        let net = build_jump_approx(j, h, w).unwrap();
        let e2 = quad::integrate_pieces(
            |t| (net.forward_unchecked(&[t]) - if t >= j { h } else { 0.0 }).powi(2),
            0.0,
            1.0,
            &[j - w, j],
        );
        worst = worst.max((e2.sqrt() - h * (w / 3.0).sqrt()).abs());
    }
    outcome(worst <= 1e-8, format!("largest deviation {worst:.1e}"))
}

fn check(name: &str) -> Outcome {
    let r = run_check(name, 0).unwrap();
    outcome(
        r.passed,
        format!(
            "statistic {:.4e}, tolerance {:.4e}; {}",
            r.statistic, r.tolerance, r.note
        ),
    )
}

struct RateRuns {
    deep_hits: usize,
    krr_hits: usize,
    deep: Vec<f64>,
    krr: Vec<f64>,
}

fn rate_runs(
    cfg_json: &str,
    deep_ok: impl Fn(f64) -> bool,
    krr_ok: impl Fn(f64) -> bool,
) -> RateRuns {
    let mut out = RateRuns {
        deep_hits: 0,
        krr_hits: 0,
        deep: vec![],
        krr: vec![],
    };
    for run in 0..10 {
        let mut cfg = ExperimentConfig::from_json(cfg_json).unwrap();
        cfg.master_seed = run;
        let res = run_sweep(&cfg).unwrap();
        assert!(res.failures.is_empty(), "{:?}", res.failures);
        let slope = |label: &str| {
            res.reports
                .iter()
                .find(|r| r.estimator == label)
                .and_then(|r| r.slope)
                .unwrap_or(f64::NAN)
        };
        let (d, k) = (slope("deep_constructive"), slope("krr"));
        out.deep_hits += deep_ok(d) as usize;
        out.krr_hits += krr_ok(k) as usize;
        out.deep.push(d);
        out.krr.push(k);
    }
    out
}

fn fmt_slopes(v: &[f64]) -> String {
    v.iter()
        .map(|s| format!("{s:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn rate_outcome(r: RateRuns) -> Outcome {
    outcome(
        r.deep_hits >= 8 && r.krr_hits >= 8,
        format!(
            "deep {}/10 [{}]; krr {}/10 [{}]",
            r.deep_hits,
            fmt_slopes(&r.deep),
            r.krr_hits,
            fmt_slopes(&r.krr)
        ),
    )
}

fn outputs_with_threads(cfg: &ExperimentConfig, threads: usize) -> Vec<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    pool.install(|| {
        let res = run_sweep(cfg).unwrap();
        write_outputs(cfg, &res, dir.path()).unwrap();
    });
    [&cfg.output.csv, &cfg.output.report, &cfg.output.plot]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect()
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::from_json(
        r#"{"target": {"class": "jk", "k": 3, "c": 2.0},
            "estimators": [
              {"kind": "deep_constructive"},
              {"kind": "krr", "kernel": {"type": "laplace", "lengthscale": 0.2}},
              {"kind": "nadaraya_watson", "window": "box", "bandwidth": {"scale": 0.5, "exponent": -0.333}},
              {"kind": "wavelet_threshold"}],
            "n_grid": [64, 128, 256, 512], "replications": 3, "sigma": 0.5, "master_seed": 11}"#,
    )
    .unwrap();
    let mut mc = ExperimentConfig::from_json(
        r#"{"target": {"class": "i0", "n_s": 2, "c": 2.0, "d": 2},
            "estimators": [{"kind": "krr", "kernel": {"type": "gaussian", "lengthscale": 0.3},
                            "lambda": {"policy": "fixed", "value": 0.01}}],
            "n_grid": [32, 64, 128, 256], "replications": 2, "sigma": 0.3, "master_seed": 5}"#,
    )
    .unwrap();
    mc.risk.mc_points = 20_000;
    let mut same = 0;
    let mut total = 0;
    for c in [&cfg, &mc] {
        let a = outputs_with_threads(c, 1);
        let b = outputs_with_threads(c, 8);
        let again = outputs_with_threads(c, 1);
        for ((x, y), z) in a.iter().zip(&b).zip(&again) {
            total += 1;
            same += (x == y && x == z) as usize;
        }
    }
    outcome(
        same == total,
        format!("{same}/{total} files byte-identical across 1, 8 and 1 threads"),
    )
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "haar orthonormality", s(5), haar_orthonormality),
        criterion(2, "weak-lp oracle", s(5), weak_lp_equivalence),
        criterion(3, "composition bound", s(30), composition_bound),
        criterion(4, "entropy calculators", s(1), entropy_calculators),
        criterion(5, "jump certificate", s(5), jump_certificate),
        criterion(6, "kl identity", s(30), || check("kl_identity")),
        criterion(7, "linear risk convexity", s(120), || {
            check("linear_convexity")
        }),
        criterion(8, "rate separation on J_k", s(900), || {
            rate_outcome(rate_runs(
                JUMPS,
                |d| (-1.25..=-0.80).contains(&d),
                |k| k >= -0.75,
            ))
        }),
        criterion(9, "rate on J^p", s(1200), || {
            rate_outcome(rate_runs(
                WAVELET,
                |d| (d + 2.0 / 3.0).abs() <= 0.18,
                |k| k >= -0.62,
            ))
        }),
        criterion(10, "bin concentration", s(60), || {
            check("bin_concentration")
        }),
        criterion(11, "determinism", s(600), determinism),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len());
}
