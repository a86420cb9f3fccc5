use ergodelab::lab::direct_rate_check;
use ergodelab::models::{ModelElement, OperatorModel};
use ergodelab::quad::{integrate, EndpointHint, Interval};
use ergodelab::stieltjes::StieltjesFunction;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn singular_power_integrals(p in 0.0f64..0.9) {
        let r = integrate(|s| s.powf(-p), Interval::new(0.0, 1.0).unwrap(), EndpointHint::singular(p), TOL).unwrap();
        prop_assert!((r.value - 1.0 / (1.0 - p)).abs() <= 1e-7 / (1.0 - p));
    }

    #[test]
    fn power_tail_integrals(q in 1.2f64..4.0, a in 0.5f64..5.0) {
        let r = integrate(|s| s.powf(-q), Interval::from(a).unwrap(), EndpointHint::tail(q), TOL).unwrap();
        let exact = a.powf(1.0 - q) / (q - 1.0);
        prop_assert!((r.value - exact).abs() <= 1e-7 * exact);
    }

    // g(z) = z^-γ is decreasing while z g(z) increases
    #[test]
    fn stieltjes_power_monotonicity(gamma in 0.05f64..0.95, z in 1e-3f64..1e3, k in 1.01f64..10.0) {
        let g = StieltjesFunction::power(gamma).unwrap();
        let (a, b) = (g.eval(z, TOL).unwrap(), g.eval(k * z, TOL).unwrap());
        prop_assert!((a - z.powf(-gamma)).abs() <= 1e-6 * a);
        prop_assert!(b < a);
        prop_assert!(k * z * b > z * a);
    }

    // C_t on diag(λ) scales coordinate i by (1 - e^{-λ_i t})/(λ_i t)
    #[test]
    fn matrix_cesaro_means(
        lambdas in prop::collection::vec(0.01f64..50.0, 1..6),
        t in 0.01f64..1e4,
        seed in -3.0f64..3.0,
    ) {
        let x: Vec<f64> = (0..lambdas.len()).map(|i| seed + i as f64).collect();
        let model = OperatorModel::matrix(lambdas.clone()).unwrap();
        let el = ModelElement::Vector(x.clone());
        let got = model.cesaro_norm(t, &el, TOL).unwrap();
        let exact: f64 = lambdas.iter().zip(&x).map(|(l, v)| v.abs() * -(-l * t).exp_m1() / (l * t)).sum();
        prop_assert!((got - exact).abs() <= 1e-9 * exact.max(1e-300));
        prop_assert!(got <= model.norm(&el, TOL).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn direct_rate_on_windows(gamma in 0.1f64..0.9, a in 1.0f64..5.0, w in 0.1f64..20.0) {
        let g = StieltjesFunction::power(gamma).unwrap();
        let x = ModelElement::parse(&format!("window:{a}:{}", a + w)).unwrap();
        let r = direct_rate_check(&OperatorModel::L1, &g, &x, &[1.0, 16.0, 256.0, 4096.0], 1e-8).unwrap();
        prop_assert!(r.within_bound(), "{:?}", r.rows);
    }
}
