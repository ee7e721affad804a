//! Structural properties of the drift factor across routes.

use bridgestop_core::filter::{f_beta, f_gamma, f_general, DriftEval, PosteriorState};
use bridgestop_core::priors::Prior;
use proptest::prelude::*;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn tabulated() -> Prior {
    Prior::tabulated(vec![0.0, 0.5, 1.0, 2.0], vec![0.2, 1.0, 0.6, 0.0]).unwrap()
}

type Route = Box<dyn Fn(f64, f64) -> DriftEval>;

fn routes() -> Vec<(&'static str, Route, f64)> {
    let tab = tabulated();
    vec![
        ("gamma n=1", Box::new(|t, x| f_gamma(1, 0.5, t, x).unwrap()), 3.0),
        ("gamma n=2", Box::new(|t, x| f_gamma(2, 1.0, t, x).unwrap()), 3.0),
        ("gamma n=3", Box::new(|t, x| f_gamma(3, 0.5, t, x).unwrap()), 3.0),
        ("beta 1/4", Box::new(|t, x| f_beta(0.25, t, x).unwrap()), 0.9),
        ("beta 1/2", Box::new(|t, x| f_beta(0.5, t, x).unwrap()), 0.9),
        ("beta 2", Box::new(|t, x| f_beta(2.0, t, x).unwrap()), 0.9),
        (
            "tabulated",
            Box::new(move |t, x| {
                f_general(&PosteriorState::new(&tab, t, x, 0.0).unwrap()).unwrap()
            }),
            1.5,
        ),
    ]
}

#[test]
fn f_is_unimodal_in_level() {
    for (name, f, t_max) in routes() {
        for t in [0.1 * t_max, 0.5 * t_max, t_max] {
            for x in grid(-3.0, 3.0, 200) {
                if x.abs() < 0.02 {
                    continue;
                }
                let h = 1e-3 * x.abs();
                let d = f(t, x + h).f_value - f(t, x - h).f_value;
                assert!(d * x < 0.0, "{name} t={t} x={x} diff={d}");
            }
        }
    }
}

#[test]
fn gamma_drift_is_bounded_by_rate() {
    for n in 1..=4 {
        let a = (2.0f64 * 0.7).sqrt();
        for t in [0.0, 0.3, 2.0] {
            for x in grid(-4.0, 4.0, 81) {
                if x == 0.0 {
                    continue;
                }
                let d = f_gamma(n, 0.7, t, x).unwrap().drift.abs();
                if n == 1 {
                    assert!((d - a).abs() <= 1e-14 * a);
                } else {
                    assert!(d <= a * (1.0 + 1e-14), "n={n} t={t} x={x}");
                }
            }
        }
    }
}

#[test]
fn drift_jumps_across_zero() {
    for (name, f, t_max) in routes() {
        let t = 0.5 * t_max;
        let limit = f(t, 0.0).zero_limit.expect(name);
        let above = f(t, 1e-6).drift;
        let below = f(t, -1e-6).drift;
        assert!(above < 0.0 && below > 0.0, "{name}");
        assert!((above + limit).abs() < 1e-3 * limit, "{name}: {above} vs {limit}");
        assert!((below - limit).abs() < 1e-3 * limit, "{name}: {below} vs {limit}");
    }
}

#[test]
fn drift_grows_at_most_linearly() {
    for (name, f, t_max) in routes() {
        let t = 0.5 * t_max;
        let ratio = |x: f64| f(t, x).drift.abs() / (1.0 + x.abs());
        let core = grid(0.01, 10.0, 100).into_iter().map(ratio).fold(0.0, f64::max);
        let far = grid(10.0, 40.0, 30).into_iter().map(ratio).fold(0.0, f64::max);
        assert!(far <= 1.5 * core, "{name}: {far} vs {core}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_are_even(t in 0.0f64..0.95, x in 0.001f64..5.0, n in 1u32..4, beta in 0.1f64..3.0) {
        let a = f_beta(beta, t, x).unwrap().f_value;
        let b = f_beta(beta, t, -x).unwrap().f_value;
        prop_assert!((a - b).abs() <= 1e-14 * a);
        let a = f_gamma(n, beta, t, x).unwrap().f_value;
        let b = f_gamma(n, beta, t, -x).unwrap().f_value;
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }

    #[test]
    fn quadrature_is_even_and_nonnegative(t in 0.01f64..1.4, x in 0.001f64..3.0) {
        let tab = tabulated();
        let a = f_general(&PosteriorState::new(&tab, t, x, 0.0).unwrap()).unwrap().f_value;
        let b = f_general(&PosteriorState::new(&tab, t, -x, 0.0).unwrap()).unwrap().f_value;
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn beta_route_matches_quadrature(t in 0.0f64..0.95, x in 0.001f64..3.0, beta in 0.2f64..3.0) {
        let prior = Prior::beta_half(beta).unwrap();
        let q = f_general(&PosteriorState::new(&prior, t, x, 0.0).unwrap()).unwrap().f_value;
        let c = f_beta(beta, t, x).unwrap().f_value;
        prop_assert!((q - c).abs() <= 1e-6 * c, "{} vs {}", q, c);
    }
}
