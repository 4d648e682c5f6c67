use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_minimax::classes::{
    lp_norm, weak_lp_norm, CoeffSeq, PiecewiseConstantFn, TargetFunction,
};
use sparse_minimax::estimators::{
    kernel_ridge, krr_weights, nadaraya_watson, nw_weights, Dataset, DatasetMeta, Kernel, Window,
};
use sparse_minimax::harness::{
    deep_exponent, derive_seed, exact_l2_risk, fit_rate, generate_data, linear_exponent,
    mc_l2_risk, RateClass,
};
use sparse_minimax::quad;
use sparse_minimax::relu_net::{build_jump_approx, clip};

fn dataset(xs: &[f64], ys: Vec<f64>) -> Dataset {
    Dataset::new(1, xs.to_vec(), ys, DatasetMeta::default()).unwrap()
}

fn step(a0: f64, jumps: Vec<(f64, f64)>) -> TargetFunction {
    let k = jumps.len();
    let c = a0.abs() + jumps.iter().map(|j| j.1.abs()).sum::<f64>() + 1.0;
    TargetFunction::from_piecewise(PiecewiseConstantFn::new(a0, jumps), k, c).unwrap()
}

fn jumps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01f64..0.99, -1.5f64..1.5), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_estimators_are_linear_in_y(
        xs in prop::collection::vec(0.0f64..=1.0, 8..40),
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        x in 0.0f64..=1.0,
    ) {
        let n = xs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y1: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
        let y2: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + v).collect();
        let kernel = Kernel::Laplace { lengthscale: 0.3 };
        let fit = |ys: Vec<f64>| kernel_ridge(&dataset(&xs, ys), kernel, 0.05).unwrap().predict(&[x]);
        let lhs = fit(mix.clone());
        let rhs = a * fit(y1.clone()) + fit(y2.clone());
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()));

        let w = krr_weights(&dataset(&xs, y1.clone()), kernel, 0.05, &[x]).unwrap();
        let dot: f64 = w.iter().zip(&y1).map(|(u, v)| u * v).sum();
        prop_assert!((dot - fit(y1.clone())).abs() <= 1e-8 * (1.0 + dot.abs()));

        let nw = |ys: Vec<f64>| nadaraya_watson(&dataset(&xs, ys), 0.2, Window::Gaussian).unwrap();
        let est = nw(y1.clone());
        let lhs = nw(mix).predict(&[x]);
        let rhs = a * est.predict(&[x]) + nw(y2).predict(&[x]);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        let w = nw_weights(&est, &[x]).unwrap();
        let dot: f64 = w.iter().zip(&y1).map(|(u, v)| u * v).sum();
        prop_assert!((dot - est.predict(&[x])).abs() <= 1e-9 * (1.0 + dot.abs()));
    }

    #[test]
    fn clipping_never_increases_distance(
        js in jumps(),
        j in 0.1f64..0.9,
        h in -4.0f64..4.0,
        w in 0.001f64..0.1,
    ) {
        let f = step(0.0, js.clone());
        let big_f = f.breakpoints_1d().unwrap().iter().chain([0.0, 1.0].iter())
            .map(|&t| f.eval_unchecked(&[t]).abs())
            .fold(0.0, f64::max)
            .max(1e-3);
        let net = build_jump_approx(j, h, w).unwrap();
        let mut breaks: Vec<f64> = js.iter().map(|p| p.0).collect();
        breaks.extend([j - w, j]);
        let dist = |clipped: bool| quad::integrate_pieces(
            |x| {
                let raw = net.forward_raw(&[x]);
                let v = if clipped { clip(raw, Some(big_f)) } else { raw };
                (v - f.eval_unchecked(&[x])).powi(2)
            },
            0.0, 1.0, &breaks,
        );
        prop_assert!(dist(true) <= dist(false) + 1e-12);
    }

    #[test]
    fn slope_is_scale_invariant(
        slope in -2.0f64..0.0,
        noise in prop::collection::vec(-0.2f64..0.2, 6),
        c in 1e-3f64..1e3,
        s in 0.5f64..8.0,
    ) {
        let pts: Vec<(f64, f64)> = noise.iter().enumerate()
            .map(|(i, e)| {
                let n = 128.0 * 2f64.powi(i as i32);
                (n, n.powf(slope) * e.exp())
            })
            .collect();
        let base = fit_rate(&pts).unwrap();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, r)| (s * n, c * r)).collect();
        let other = fit_rate(&scaled).unwrap();
        prop_assert!((base.slope - other.slope).abs() < 1e-9);
        prop_assert!((base.slope_se - other.slope_se).abs() < 1e-9);
    }

    #[test]
    fn risks_are_nonnegative(js in jumps(), seed in any::<u64>(), sigma in 0.0f64..1.0) {
        let f = step(0.2, js);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = generate_data(&f, 64, sigma, seed, &mut rng).unwrap();
        let est = kernel_ridge(&data, Kernel::Laplace { lengthscale: 0.2 }, 0.1).unwrap();
        prop_assert!(exact_l2_risk(&est, &f).unwrap() >= 0.0);
        let mc = mc_l2_risk(&est, &f, 500, &mut rng);
        prop_assert!(mc.risk >= 0.0 && mc.se >= 0.0);
    }

    #[test]
    fn deep_beats_linear_iff_p_below_one(p in 0.05f64..1.95) {
        prop_assume!((p - 1.0).abs() > 1e-9);
        let class = RateClass::Wavelet { p, beta: 1.0 };
        prop_assert_eq!(deep_exponent(class) < linear_exponent(class), p < 1.0);
    }

    #[test]
    fn same_seed_same_data(js in jumps(), master in any::<u64>(), path in prop::collection::vec(any::<u64>(), 0..4)) {
        let s = derive_seed(master, &path);
        prop_assert_eq!(s, derive_seed(master, &path));
        let f = step(0.0, js);
        let a = generate_data(&f, 32, 0.5, s, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        let b = generate_data(&f, 32, 0.5, s, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn weak_lp_below_lp(values in prop::collection::vec(-5.0f64..5.0, 0..50), p in 0.2f64..1.9) {
        let seq: CoeffSeq<usize> = values.iter().copied().enumerate().collect();
        prop_assert!(weak_lp_norm(&seq, p).unwrap() <= lp_norm(&seq, p).unwrap() * (1.0 + 1e-12));
    }
}
