use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_minimax::classes::{sample_jk, PiecewiseConstantFn, TargetClass, TargetFunction};
use sparse_minimax::estimators::{kernel_ridge, nadaraya_watson, Kernel, Window};
use sparse_minimax::harness::{
    cell_target, exact_l2_risk, fit_rate, generate_data, mc_l2_risk, read_csv, run_sweep,
    write_csv, ExperimentConfig,
};

fn step(a0: f64, jumps: Vec<(f64, f64)>) -> TargetFunction {
    let k = jumps.len();
    let c = a0.abs() + jumps.iter().map(|j| j.1.abs()).sum::<f64>() + 1.0;
    TargetFunction::from_piecewise(PiecewiseConstantFn::new(a0, jumps), k, c).unwrap()
}

#[test]
fn vanishing_noise_reproduces_target() {
    let f = sample_jk(3, 2.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let data = generate_data(&f, 1000, 1e-12, 9, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    for i in 0..data.n() {
        assert!((data.ys[i] - f.eval(data.x(i)).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn noise_mean_within_clt_band() {
    let n = 1_000_000;
    let sigma = 0.7;
    let f = step(0.0, vec![]);
    let data = generate_data(&f, n, sigma, 4, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let mean = data.ys.iter().sum::<f64>() / n as f64;
    assert!(mean.abs() <= 4.0 * sigma / (n as f64).sqrt(), "mean {mean}");
}

#[test]
fn zero_estimator_against_half_step() {
    let f = step(0.0, vec![(0.5, 2f64.sqrt())]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let xs: Vec<f64> = (0..20).map(|_| rng.random()).collect();
    let data = sparse_minimax::estimators::Dataset::from_1d(xs, vec![0.0; 20]).unwrap();
    let zero = kernel_ridge(&data, Kernel::Laplace { lengthscale: 0.2 }, 0.1).unwrap();
    assert!((exact_l2_risk(&zero, &f).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for pair in 0..20 {
        let f = sample_jk(4, 3.0, &mut rng).unwrap();
        let data = generate_data(&f, 200, 0.4, pair, &mut rng).unwrap();
        let est = nadaraya_watson(&data, 0.05, Window::Box).unwrap();
        let exact = exact_l2_risk(&est, &f).unwrap();
        let mc = mc_l2_risk(&est, &f, 100_000, &mut rng);
        assert!(
            (mc.risk - exact).abs() <= 3.0 * mc.se,
            "pair {pair}: mc {} ± {}, exact {exact}",
            mc.risk,
            mc.se
        );
    }
}

fn krr_config(replications: usize) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"target": {{"class": "jk", "k": 2, "c": 2.0}},
            "estimators": [{{"kind": "krr", "kernel": {{"type": "laplace", "lengthscale": 0.2}},
                             "lambda": {{"policy": "fixed", "value": 0.05}}}}],
            "n_grid": [64, 128, 256, 512], "replications": {replications}, "sigma": 0.5, "master_seed": 3}}"#
    ))
    .unwrap()
}

#[test]
fn doubling_replications_halves_squared_se() {
    let se2 = |r: usize| -> f64 {
        let res = run_sweep(&krr_config(r)).unwrap();
        res.reports[0].cells.iter().map(|c| c.se * c.se).sum()
    };
    let ratio = se2(50) / se2(100);
    assert!((1.0..=4.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn same_seed_same_csv_bytes() {
    let cfg = krr_config(2);
    let bytes = || {
        let mut buf = Vec::new();
        write_csv(&mut buf, &run_sweep(&cfg).unwrap().records).unwrap();
        buf
    };
    let a = bytes();
    assert_eq!(a, bytes());
    let header = String::from_utf8(a.clone()).unwrap();
    assert!(header.starts_with("estimator,n,rep,risk,risk_se,fit_seconds\n"));
    let back = read_csv(a.as_slice()).unwrap();
    assert_eq!(back, run_sweep(&cfg).unwrap().records);
}

#[test]
fn noiseless_constructive_fit_is_within_ramp_error() {
    let w = 1e-7;
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"target": {{"class": "jp", "p": 0.8, "c1": 1.0, "c2": 1.0, "beta": 1.0, "max_level": 2}},
            "estimators": [{{"kind": "deep_constructive",
                             "budget": {{"atoms": 64, "max_level": 3, "ramp_width": {w}}}}}],
            "n_grid": [256], "replications": 1, "sigma": 0.0, "master_seed": 8}}"#
    ))
    .unwrap();
    let res = run_sweep(&cfg).unwrap();
    assert!(res.failures.is_empty());
    let f = cell_target(&cfg, 256, 0).unwrap();
    let TargetClass::Jp { expansion } = &f.class else {
        panic!("expected a wavelet target")
    };
    // ‖ψ̃_{k,l} - ψ_{k,l}‖² = 2^k (1 + 4 + 1) w / 3 for the three ramped jumps
    let ramp: f64 = expansion
        .coeffs()
        .iter()
        .map(|(idx, c)| c.abs() * (2f64.powi(idx.k[0] as i32 + 1) * w).sqrt())
        .sum();
    let risk = res.records[0].risk;
    assert!(
        risk <= ramp * ramp * (1.0 + 1e-9) + 1e-15,
        "risk {risk}, ramp error² {}",
        ramp * ramp
    );
}

#[test]
fn exact_power_laws() {
    let grid: Vec<f64> = (7..=13).map(|k| 2f64.powi(k)).collect();
    for (c, e) in [(3.0, -1.0), (0.2, -0.5)] {
        let pts: Vec<(f64, f64)> = grid.iter().map(|&n| (n, c * n.powf(e))).collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope - e).abs() < 1e-12);
        assert!((fit.intercept - f64::ln(c)).abs() < 1e-10);
    }
}

#[test]
fn slope_standard_error_is_calibrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let grid: Vec<f64> = (7..=13).map(|k| 2f64.powi(k)).collect();
    let mut within = 0;
    for _ in 0..100 {
        let slope = rng.random_range(-1.5..-0.3);
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .map(|&n| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (n, n.powf(slope) * (0.1 * z).exp())
            })
            .collect();
        let fit = fit_rate(&pts).unwrap();
        within += ((fit.slope - slope).abs() <= fit.slope_se) as usize;
    }
    // t with 5 degrees of freedom puts 64% inside one standard error
    assert!(
        (50..=80).contains(&within),
        "{within}/100 within one standard error"
    );
}
