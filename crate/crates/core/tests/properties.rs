mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use regensim::analysis::{batch_means, overlapping_batch_means, window_sup, BatchSchedule, WindowStarts};
use regensim::ctmc::{
    alpha_mixing_exact, asymptotic_variance_exact, resolvent, simulate_ctmc, stationary_distribution,
    transition_matrix, tv_ergodicity_profile, CtmcModel,
};
use regensim::pdmp::{zigzag_simulate, GaussianTarget, PdmpState};
use regensim::quadrature::{integrate_to_infinity, Tolerance};
use regensim::rng::stream;
use regensim::splitting::{build_minorisation, residual_kernel};
use regensim::{integrate_functional, CumulativeIntegral, Functional, Trajectory};

fn generator(max_n: usize) -> impl Strategy<Value = CtmcModel> {
    (2..=max_n)
        .prop_flat_map(|n| prop::collection::vec(0.05f64..3.0, n * n).prop_map(move |r| (n, r)))
        .prop_map(|(n, r)| {
            let mut q = DMatrix::zeros(n, n);
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    if i != j {
                        q[(i, j)] = r[i * n + j];
                        s += r[i * n + j];
                    }
                }
                q[(i, i)] = -s;
            }
            CtmcModel::new(q, None).unwrap()
        })
}

fn functional_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn resolvent_identity(model in generator(6)) {
        let u = resolvent(&model).unwrap();
        let n = model.n();
        let prod = (DMatrix::identity(n, n) - model.generator()) * u.matrix();
        let err = (prod - DMatrix::<f64>::identity(n, n)).abs().max();
        prop_assert!(err <= 1e-10, "residual {}", err);
    }

    #[test]
    fn transition_rows_are_distributions(model in generator(6), t in 0.0f64..50.0) {
        let p = transition_matrix(&model, t).unwrap();
        for x in 0..model.n() {
            let row = p.row(x);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernel_reconstruction(model in generator(6), size in 1usize..6) {
        let small: Vec<usize> = (0..size.min(model.n())).collect();
        if let Ok(cert) = build_minorisation(&model, &small) {
            let k = residual_kernel(&cert, &resolvent(&model).unwrap()).unwrap();
            prop_assert!(k.reconstruction_error() <= 1e-12);
        }
    }

    #[test]
    fn alpha_mixing_below_tv_profile(model in generator(5), s in 0.05f64..3.0) {
        let a = alpha_mixing_exact(&model, s).unwrap();
        let psi = tv_ergodicity_profile(&model, &[s]).unwrap().psi_hat[0];
        prop_assert!(a <= psi + 1e-12, "alpha {} psi {}", a, psi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn variance_oracles_agree(
        (model, f) in generator(4).prop_flat_map(|m| { let n = m.n(); (Just(m), functional_values(n)) })
    ) {
        let exact = asymptotic_variance_exact(&model, &f).unwrap();
        let pi = stationary_distribution(&model).unwrap();
        let mu = pi.expect(&f);
        let fc: Vec<f64> = f.iter().map(|v| v - mu).collect();
        let n = model.n();
        let quad = 2.0 * integrate_to_infinity(
            |t| {
                let p = transition_matrix(&model, t).unwrap();
                (0..n).map(|x| pi[x] * fc[x] * (0..n).map(|y| p.get(x, y) * fc[y]).sum::<f64>()).sum::<f64>()
            },
            0.0,
            Tolerance { rel: 1e-11, abs: 1e-13, max_intervals: 4000 },
        ).unwrap();
        prop_assert!(exact >= -1e-12);
        prop_assert!((exact - quad).abs() <= 1e-6, "{} vs {}", exact, quad);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn integral_linear_and_additive(
        seed in any::<u64>(),
        f in functional_values(3),
        g in functional_values(3),
        c in -4.0f64..4.0,
        cuts in prop::collection::vec(0.0f64..200.0, 3),
    ) {
        let model = common::three_state();
        let path: Trajectory = simulate_ctmc(&model, 0, 200.0, &mut stream(seed, 0)).unwrap().into();
        let mut p = cuts.clone();
        p.sort_by(f64::total_cmp);
        let (ff, gg) = (Functional::State(f.clone()), Functional::State(g.clone()));
        let comb = Functional::State(f.iter().zip(&g).map(|(a, b)| c * a + b).collect());
        let lhs = integrate_functional(&path, &comb, p[0], p[2]).unwrap();
        let rhs = c * integrate_functional(&path, &ff, p[0], p[2]).unwrap() + integrate_functional(&path, &gg, p[0], p[2]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        let whole = integrate_functional(&path, &ff, p[0], p[2]).unwrap();
        let parts = integrate_functional(&path, &ff, p[0], p[1]).unwrap() + integrate_functional(&path, &ff, p[1], p[2]).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-10 * (1.0 + whole.abs()));
    }

    #[test]
    fn batch_means_affine(seed in any::<u64>(), c in -5.0f64..5.0, shift in -50.0f64..50.0) {
        prop_assume!(c.abs() > 1e-3);
        let model = common::two_state();
        let path: Trajectory = simulate_ctmc(&model, 0, 5e3, &mut stream(seed, 0)).unwrap().into();
        let f = Functional::indicator(2, &[0]);
        let s = BatchSchedule::power(0.5).unwrap();
        let base = batch_means(&path, &f, &s).unwrap();
        let shifted = batch_means(&path, &f.affine(1.0, shift), &s).unwrap();
        let scaled = batch_means(&path, &f.affine(c, 0.0), &s).unwrap();
        prop_assert!((shifted.sigma2 - base.sigma2).abs() <= 1e-9 * base.sigma2.max(1e-12));
        prop_assert!((scaled.sigma2 - c * c * base.sigma2).abs() <= 1e-10 * c * c * base.sigma2);
    }

    #[test]
    fn batches_and_tail_sum_to_integral(seed in any::<u64>(), a in 0.3f64..0.8) {
        let model = common::three_state();
        let path: Trajectory = simulate_ctmc(&model, 2, 3e3, &mut stream(seed, 0)).unwrap().into();
        let f = Functional::State(vec![1.0, -2.0, 0.5]);
        let est = batch_means(&path, &f, &BatchSchedule::power(a).unwrap()).unwrap();
        let total = integrate_functional(&path, &f, 0.0, 3e3).unwrap();
        let pieces = est.means.iter().sum::<f64>() * est.ell + est.tail;
        prop_assert!((total - pieces).abs() <= 1e-9 * (1.0 + total.abs()));
    }

    #[test]
    fn obm_with_full_stride_is_batch_means(seed in any::<u64>(), ell in 20.0f64..400.0) {
        let model = common::two_state();
        let path: Trajectory = simulate_ctmc(&model, 1, 2e3, &mut stream(seed, 0)).unwrap().into();
        let f = Functional::indicator(2, &[0]);
        let bm = batch_means(&path, &f, &BatchSchedule::table(vec![(1.0, ell)]).unwrap()).unwrap();
        let obm = overlapping_batch_means(&path, &f, ell, ell).unwrap();
        prop_assert_eq!(bm.sigma2.to_bits(), obm.sigma2.to_bits());
        prop_assert_eq!(bm.means, obm.means);
    }

    #[test]
    fn window_sup_monotone_in_window(seed in any::<u64>(), a1 in 1.0f64..100.0, a2 in 1.0f64..100.0) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let model = common::three_state();
        let path: Trajectory = simulate_ctmc(&model, 0, 300.0, &mut stream(seed, 0)).unwrap().into();
        let f = Functional::State(vec![1.0, -2.0, 0.5]);
        let cum = CumulativeIntegral::new(&path, &f).unwrap();
        let small = window_sup(cum.times(), cum.values(), lo, WindowStarts::Unrestricted).unwrap();
        let large = window_sup(cum.times(), cum.values(), hi, WindowStarts::Unrestricted).unwrap();
        prop_assert!(small <= large + 1e-12);
        let restricted = window_sup(cum.times(), cum.values(), lo, WindowStarts::Restricted).unwrap();
        prop_assert!(restricted <= small + 1e-12);
    }

    #[test]
    fn fixed_seed_is_deterministic(seed in any::<u64>(), idx in 0u64..1000) {
        let model = common::dense6();
        let a = simulate_ctmc(&model, 0, 100.0, &mut stream(seed, idx)).unwrap();
        let b = simulate_ctmc(&model, 0, 100.0, &mut stream(seed, idx)).unwrap();
        prop_assert_eq!(a, b);
        let t = GaussianTarget::standard(2);
        let z0 = PdmpState::new(vec![0.3, -1.0], vec![1.0, -1.0]);
        let p = zigzag_simulate(&t, &z0, 50.0, &mut stream(seed, idx)).unwrap();
        let q = zigzag_simulate(&t, &z0, 50.0, &mut stream(seed, idx)).unwrap();
        prop_assert_eq!(p.times(), q.times());
        prop_assert_eq!(p.max_continuity_gap(), 0.0);
    }
}
