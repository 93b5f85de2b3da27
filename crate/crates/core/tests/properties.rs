use orliczvar::conjugate::{conjugate, conjugate_numeric, young_gap};
use orliczvar::nfunction::{make_aniso, make_cosh, make_exponential, make_power, radial_minorant};
use orliczvar::orlicz::{luxemburg_norm, modular};
use orliczvar::potential::TimeSeries;
use orliczvar::solver::{discrete_action, discrete_action_gradient, lbfgs, LbfgsConfig, Problem};
use orliczvar::{ConvexFunction, NFunction, Potential, Trajectory};
use proptest::prelude::*;

fn family(k: usize, d: usize) -> NFunction {
    match k % 4 {
        0 => make_power(2.0, d).unwrap(),
        1 => make_power(3.5, d).unwrap(),
        2 => make_exponential(d).unwrap(),
        _ => make_cosh(d).unwrap(),
    }
}

fn point(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn young_inequality_is_nonnegative(k in 0usize..4, x in point(2, 2.0), y in point(2, 2.0)) {
        let phi = family(k, 2);
        let star = conjugate_numeric(&phi);
        let gap = young_gap(&phi, &star, &x, &y).unwrap();
        prop_assert!(gap >= -1e-9 * (1.0 + phi.value(&x)), "gap {gap}");
    }

    #[test]
    fn young_equality_at_gradient(k in 0usize..4, x in point(1, 2.0)) {
        let phi = family(k, 1);
        let star = conjugate(&phi);
        let g = phi.gradient(&x);
        let gap = young_gap(&phi, &star, &x, &g).unwrap();
        prop_assert!(gap.abs() <= 1e-8 * (1.0 + phi.value(&x)), "gap {gap}");
    }

    #[test]
    fn nfunction_is_even_and_convex(k in 0usize..4, a in point(2, 3.0), b in point(2, 3.0), s in 0.0f64..1.0) {
        let phi = family(k, 2);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert!((phi.value(&a) - phi.value(&neg)).abs() <= 1e-12 * (1.0 + phi.value(&a)));
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + (1.0 - s) * y).collect();
        let chord = s * phi.value(&a) + (1.0 - s) * phi.value(&b);
        prop_assert!(phi.value(&m) <= chord + 1e-12 * (1.0 + chord));
    }

    #[test]
    fn conjugate_matches_closed_form(p in 1.2f64..6.0, z in -20.0f64..20.0) {
        let numeric = conjugate_numeric(&make_power(p, 1).unwrap()).try_value(&[z]).unwrap();
        let exact = z.abs().powf(p / (p - 1.0)) / (p / (p - 1.0));
        prop_assert!((numeric - exact).abs() <= 1e-8 * (1.0 + exact), "{numeric} vs {exact}");
    }

    #[test]
    fn radial_minorant_lies_below_phi(p1 in 1.5f64..4.0, p2 in 1.5f64..4.0, theta in 0.0f64..6.3, k in 0usize..=64) {
        let phi = make_aniso(p1, p2, 1, 1).unwrap();
        let a = radial_minorant(&phi, 2.0, 64).unwrap();
        let r = a.knots[k];
        let y = [r * theta.cos(), r * theta.sin()];
        prop_assert!(a.values[k] <= phi.value(&y) + 1e-9);
        prop_assert!(a.values.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] >= -1e-9));
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(k in 0usize..3, c in 0.1f64..10.0, seed in 0u64..1000) {
        let phi = family(k, 1);
        let mut rng = orliczvar::sampling::rng(seed);
        let u = orliczvar::sampling::random_band_limited(&mut rng, 32, 1, 1.0, 3, 1.0, 0.5);
        let n1 = luxemburg_norm(&phi, &u).unwrap();
        let n2 = luxemburg_norm(&phi, &u.scale(c)).unwrap();
        prop_assert!((n2 - c * n1).abs() <= 1e-6 * c * n1, "{n2} vs {}", c * n1);
        let at = modular(&phi, &u.scale(1.0 / n1)).unwrap().value;
        prop_assert!(at <= 1.0 + 1e-12);
    }

    #[test]
    fn action_gradient_matches_differences(k in 0usize..3, seed in 0u64..1000, f in -2.0f64..2.0) {
        let phi = family(k, 1);
        let pot = Potential::quadratic_forcing(vec![TimeSeries { sin: vec![f], ..Default::default() }], 1.0).unwrap();
        let problem = Problem::new(phi, pot, 12).unwrap();
        let mut rng = orliczvar::sampling::rng(seed);
        let u = orliczvar::sampling::random_band_limited(&mut rng, 12, 1, 1.0, 2, 0.05, 1.0);
        let g = discrete_action_gradient(&problem, &u).unwrap();
        let scale = g.values().iter().fold(1e-3f64, |m, v| m.max(v.abs()));
        for j in 0..12 {
            let shifted = |s: f64| {
                let mut v = u.values().to_vec();
                v[j] += s;
                discrete_action(&problem, &Trajectory::new(1.0, 1, v).unwrap()).unwrap()
            };
            let eps = 1e-6;
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            prop_assert!((fd - g.values()[j]).abs() <= 1e-5 * scale, "node {j}: {fd} vs {}", g.values()[j]);
        }
    }

    #[test]
    fn lbfgs_trace_never_increases(a in 1.0f64..100.0, x0 in point(3, 5.0)) {
        let f = |x: &[f64]| {
            let v = a * x[0] * x[0] + x[1].powi(4) + (x[2] - 1.0).powi(2);
            (v, vec![2.0 * a * x[0], 4.0 * x[1].powi(3), 2.0 * (x[2] - 1.0)])
        };
        let out = lbfgs(f, x0, &LbfgsConfig::default());
        prop_assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(out.value <= out.trace[0]);
    }
}
