use localest::asymptotics::{confidence_interval, normal_quantile};
use localest::estimators::{augmented_mle, proxy_mle_with_scale, ProxyScale};
use localest::fd::{simulate, thomas_solve, CoefficientField, Grid, InitialCondition, SimConfig, SimOptions, TridiagonalOperator};
use localest::harness::checks::dense_solve;
use localest::harness::seed::derive_seed;
use localest::harness::studies::error_summary;
use localest::kernels::{make_paper_kernels, rescale, KernelSpec};
use localest::measurements::{analytic_variations, MeasurementPath, PathMeta, QvMode};
use localest::spectral::{Observable, OracleModel, Start, Truncation};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::OnceLock;

fn k1() -> &'static KernelSpec {
    static K: OnceLock<KernelSpec> = OnceLock::new();
    K.get_or_init(|| make_paper_kernels().0)
}

fn meta(delta: f64, n: usize) -> PathMeta {
    PathMeta {
        delta,
        x0: 0.5,
        dt: 1.0 / n as f64,
        horizon: 1.0,
        seed: 0,
        kernel: "k1".into(),
        qv_analytic: Some(1.0),
        cv_analytic: Some(-1.0),
    }
}

fn series(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-10.0f64..10.0, n + 1),
        prop::collection::vec(-10.0f64..10.0, n + 1),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn estimators_ignore_kernel_amplitude((x, y) in series(40), c in 0.01f64..100.0, delta in 0.01f64..0.4) {
        let base = MeasurementPath::new(meta(delta, 40), x.clone(), y.clone()).unwrap();
        let mut m = meta(delta, 40);
        m.qv_analytic = Some(c * c);
        m.cv_analytic = Some(-c * c);
        let scaled = MeasurementPath::new(
            m,
            x.iter().map(|v| c * v).collect(),
            y.iter().map(|v| c * v).collect(),
        ).unwrap();
        let a = augmented_mle(&base).unwrap().theta_hat;
        let b = augmented_mle(&scaled).unwrap().theta_hat;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        let scale = ProxyScale { value: 0.7, assumption_violated: false };
        for qv in [QvMode::Realized, QvMode::Analytic] {
            let p = proxy_mle_with_scale(&base, &scale, qv).unwrap().theta_hat;
            let q = proxy_mle_with_scale(&scaled, &scale, qv).unwrap().theta_hat;
            prop_assert!((p - q).abs() <= 1e-9 * p.abs());
            prop_assert!(p > 0.0);
        }
    }

    #[test]
    fn csv_round_trip_is_exact((x, y) in series(25)) {
        let p = MeasurementPath::new(meta(0.1, 25), x, y).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = MeasurementPath::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(p.x_series, q.x_series);
        prop_assert_eq!(p.xlap_series, q.xlap_series);
    }

    #[test]
    fn quadratic_variation_of_probe_is_scale_free(delta in 0.02f64..0.45, x0 in 0.05f64..0.95, sigma in 0.1f64..3.0) {
        let probe = rescale(k1(), delta, x0).unwrap();
        let (qv, cv) = analytic_variations(&probe, |_| sigma, 1.0).unwrap();
        let n = k1().norms().unwrap();
        prop_assert!((qv - sigma * sigma * n.k).abs() <= 1e-6 * qv);
        prop_assert!((cv + sigma * sigma * n.dk / (delta * delta)).abs() <= 1e-6 * cv.abs());
    }

    #[test]
    fn oracle_covariance_is_symmetric_psd(
        theta in 0.3f64..3.0,
        delta in 0.05f64..0.3,
        times in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        let probe = rescale(k1(), delta, 0.5).unwrap();
        let model = OracleModel::new(theta, 1.0, vec![probe], Truncation::Fixed(60)).unwrap();
        let o = Observable::value(0);
        let n = times.len();
        let mut c = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                c[i][j] = model.covariance(times[i], times[j], o, o, Start::Stationary);
            }
        }
        let scale = c[0][0];
        for i in 0..n {
            for j in 0..n {
                prop_assert!((c[i][j] - c[j][i]).abs() <= 1e-12 * scale);
            }
        }
        // random quadratic forms stay non-negative
        for w in [[1.0, -1.0, 0.5, 0.2], [0.3, 0.3, -1.0, 1.0], [1.0, 1.0, 1.0, -3.0]] {
            let q: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| w[i] * w[j] * c[i][j]).sum();
            prop_assert!(q >= -1e-10 * scale);
        }
    }

    #[test]
    fn thomas_agrees_with_dense(
        diag in prop::collection::vec(2.5f64..5.0, 30),
        off in prop::collection::vec(-1.0f64..1.0, 60),
        rhs in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let n = diag.len();
        let mut lower = off[..n].to_vec();
        let mut upper = off[n..].to_vec();
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        let sys = TridiagonalOperator { lower: lower.clone(), diag: diag.clone(), upper: upper.clone() };
        let fast = thomas_solve(&sys, &rhs).unwrap();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i > 0 { a[i][i - 1] = lower[i]; }
            if i + 1 < n { a[i][i + 1] = upper[i]; }
        }
        let slow = dense_solve(a, rhs);
        for (f, s) in fast.iter().zip(&slow) {
            prop_assert!((f - s).abs() <= 1e-12);
        }
    }

    #[test]
    fn quantile_matches_reference(p in 1e-6f64..(1.0 - 1e-6)) {
        let want = Normal::new(0.0, 1.0).unwrap().inverse_cdf(p);
        let got = normal_quantile(p);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        prop_assert!((normal_quantile(1.0 - p) + got).abs() <= 1e-9 * got.abs().max(1.0));
    }

    #[test]
    fn intervals_nest_and_scale(theta in 0.01f64..10.0, delta in 0.001f64..0.5, sigma in 0.01f64..5.0, a in 0.01f64..0.5) {
        let (lo, hi) = confidence_interval(theta, delta, sigma, a).unwrap();
        let (lo2, hi2) = confidence_interval(theta, delta, sigma, a / 2.0).unwrap();
        prop_assert!(lo < theta && theta < hi);
        prop_assert!(lo2 < lo && hi < hi2);
        let (lo3, hi3) = confidence_interval(theta, 2.0 * delta, sigma, a).unwrap();
        prop_assert!(((hi3 - lo3) - 2.0 * (hi - lo)).abs() <= 1e-12 * (hi3 - lo3));
    }

    #[test]
    fn seeds_differ_across_streams(master in any::<u64>(), r in 0u64..1_000_000, tag in 0u64..16) {
        prop_assert_ne!(derive_seed(master, r, tag), derive_seed(master, r + 1, tag));
        prop_assert_ne!(derive_seed(master, r, tag), derive_seed(master, r, tag + 1));
        prop_assert_eq!(derive_seed(master, r, tag), derive_seed(master, r, tag));
    }

    #[test]
    fn error_summary_pythagoras(vals in prop::collection::vec(-5.0f64..5.0, 1..50), truth in -5.0f64..5.0) {
        let (rmse, bias, sd) = error_summary(&vals, truth);
        prop_assert!((rmse * rmse - bias * bias - sd * sd).abs() <= 1e-10 * (1.0 + rmse * rmse));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// With shared noise, the difference of two solutions solves the noiseless
    /// problem started from the difference of the initial data.
    #[test]
    fn fd_solution_is_affine_in_the_initial_field(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let grid = Grid::new(32, 120, 0.05).unwrap();
        let probe = rescale(k1(), 0.2, 0.5).unwrap();
        let run = |init: InitialCondition, sigma: f64| {
            let cfg = SimConfig { grid, coeffs: CoefficientField::constant(0.8, sigma), initial: init, seed };
            simulate(&cfg, std::slice::from_ref(&probe), &SimOptions::default()).unwrap().pop().unwrap()
        };
        let f = run(InitialCondition::Sine { k: 1, amplitude: a }, 1.0);
        let g = run(InitialCondition::Sine { k: 1, amplitude: b }, 1.0);
        let d = run(InitialCondition::Sine { k: 1, amplitude: a - b }, 0.0);
        let scale = f.x_series.iter().chain(&g.x_series).fold(1e-300f64, |m, v| m.max(v.abs()));
        for ((x, y), z) in f.x_series.iter().zip(&g.x_series).zip(&d.x_series) {
            prop_assert!((x - y - z).abs() <= 1e-10 * scale);
        }
    }
}
