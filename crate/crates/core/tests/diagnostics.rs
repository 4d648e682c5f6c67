use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_minimax::classes::{sample_jk, PiecewiseConstantFn, TargetFunction};
use sparse_minimax::diagnostics::{
    bin_concentration_check, cover_entropy_at, hypercube_packing_demo, kl_identity_check,
    l2_distance_sq, linear_convexity_check, quantized_cover_constant, quantized_cover_size,
    run_check, CHECK_NAMES,
};
use sparse_minimax::estimators::{
    erm_deep_constructive, kernel_ridge, ClassHint, DeepBudget, Kernel,
};

fn step(a0: f64, jumps: Vec<(f64, f64)>) -> TargetFunction {
    let k = jumps.len();
    let c = a0.abs() + jumps.iter().map(|j| j.1.abs()).sum::<f64>() + 1.0;
    TargetFunction::from_piecewise(PiecewiseConstantFn::new(a0, jumps), k, c).unwrap()
}

#[test]
fn kl_listed_targets() {
    let zero = step(0.0, vec![]);
    assert!((l2_distance_sq(&step(1.0, vec![]), &zero).unwrap() - 1.0).abs() < 1e-12);
    let half = step(0.0, vec![(0.5, 1.0)]);
    assert!((l2_distance_sq(&half, &zero).unwrap() - 0.5).abs() < 1e-12);
    let r = kl_identity_check(&half, &half, 0.3, 1000, 1).unwrap();
    assert!(r.passed && r.statistic == 0.0);
}

#[test]
fn kl_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for i in 0..10 {
        let f = sample_jk(3, 2.0, &mut rng).unwrap();
        let g = sample_jk(2, 1.5, &mut rng).unwrap();
        let sigma = rng.random_range(0.2..2.0);
        let r = kl_identity_check(&f, &g, sigma, 200_000, 1000 + i).unwrap();
        assert!(r.passed, "triple {i}: {r:?}");
    }
    assert!(kl_identity_check(&step(0.0, vec![]), &step(0.0, vec![]), 0.0, 10, 0).is_err());
}

fn krr(
    d: &sparse_minimax::estimators::Dataset,
) -> sparse_minimax::Result<sparse_minimax::estimators::FittedEstimator> {
    kernel_ridge(d, Kernel::Laplace { lengthscale: 0.15 }, 0.02)
}

#[test]
fn convexity_holds_for_linear_estimators() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for i in 0..20 {
        let f = sample_jk(1, 2.0, &mut rng).unwrap();
        let g = sample_jk(2, 2.0, &mut rng).unwrap();
        let r = linear_convexity_check(
            krr,
            &f,
            &g,
            &[0.25, 0.5, 0.75],
            128,
            40,
            0.5,
            500 + i,
            false,
        )
        .unwrap();
        assert!(r.passed, "pair {i}: {r:?}");
    }
}

#[test]
fn convexity_endpoints_and_equal_targets() {
    let f = step(0.0, vec![(0.3, 1.0)]);
    let g = step(0.5, vec![(0.7, -1.0)]);
    let ends = linear_convexity_check(krr, &f, &g, &[0.0, 1.0], 64, 10, 0.5, 3, false).unwrap();
    assert!(ends.passed);
    let same = linear_convexity_check(krr, &f, &f, &[0.5], 64, 10, 0.5, 3, false).unwrap();
    assert!(same.passed);
}

#[test]
fn convexity_refuses_nonlinear_estimators() {
    let f = step(0.0, vec![(0.3, 1.0)]);
    let g = step(0.5, vec![(0.7, -1.0)]);
    let deep = |d: &sparse_minimax::estimators::Dataset| {
        erm_deep_constructive(
            d,
            &ClassHint::Jumps {
                jumps: 2,
                clip: 3.0,
            },
            &DeepBudget::default(),
        )
    };
    assert!(linear_convexity_check(deep, &f, &g, &[0.5], 64, 5, 0.5, 1, false).is_err());
    let r = linear_convexity_check(deep, &f, &g, &[0.5], 64, 5, 0.5, 1, true).unwrap();
    assert!(r.exploratory);
}

#[test]
fn bins_are_deterministic_and_degenerate_cases_hold() {
    let a = bin_concentration_check(1024, 0.5, 2.5, 200, 7).unwrap();
    assert_eq!(a, bin_concentration_check(1024, 0.5, 2.5, 200, 7).unwrap());
    let r = bin_concentration_check(1024, 0.5, 1024.0, 50, 7).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!(r.passed);
}

#[test]
fn packing_is_deterministic_with_positive_rate() {
    for k in 1..=14 {
        let r = hypercube_packing_demo(k, 0.25).unwrap();
        assert_eq!(r, hypercube_packing_demo(k, 0.25).unwrap());
        assert!(r.passed, "k = {k}: {r:?}");
    }
    assert!(hypercube_packing_demo(15, 0.25).is_err());
}

#[test]
fn quantized_cover_shape() {
    for (c1, alpha, beta) in [(1.0, 1.0, 1.0), (0.5, 0.75, 1.5), (3.0, 2.0, 0.5)] {
        let c0 = quantized_cover_constant(c1, alpha, beta).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 2..=10_000usize {
            let v = quantized_cover_size(k, c1, alpha, beta).unwrap();
            let kf = k as f64;
            assert!(v <= c0 * kf * (kf.ln() + 1.0), "k = {k}");
            assert!(v > prev);
            prev = v;
        }
    }
    let lo = quantized_cover_size(50, 1.0, 1.0, 1.0).unwrap();
    let hi = quantized_cover_size(50, 1.0, 1.2, 1.0).unwrap();
    assert!(hi > lo);
}

#[test]
fn cover_entropy_scales_like_eps_power() {
    // V(ε) ≍ ε^{-1/α} (1 + ln(1/ε)): the ratio stays bounded as ε shrinks
    let alpha = 1.0;
    let ratio = |eps: f64| {
        cover_entropy_at(eps, 1.0, alpha, 1.0).unwrap()
            / (eps.powf(-1.0 / alpha) * (1.0 + (1.0 / eps).ln()))
    };
    let rs: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&e| ratio(e)).collect();
    let (lo, hi) = rs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 3.0, "{rs:?}");
}

#[test]
fn every_named_check_passes() {
    for name in CHECK_NAMES {
        let r = run_check(name, 0).unwrap();
        assert!(r.passed, "{r:?}");
    }
    assert!(run_check("missing", 0).is_err());
}
