use std::collections::BTreeMap;

use dampwave_core::bounds::{lambda_choice, lower_bound_integral};
use dampwave_core::expr::{parse, Point};
use dampwave_core::mesh::{
    embed_const, inner_l2, lambda1, lambda1_discrete, laplacian, norm_full_sq, norm_grad_sq, norm_l2_sq,
};
use dampwave_core::nonlinearity::{logpower, power};
use dampwave_core::numeric::adaptive_simpson;
use dampwave_core::{DiscreteDomain, Field};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(d: DiscreteDomain, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..d.interior_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::new(d, values).unwrap()
}

fn domains() -> impl Strategy<Value = DiscreteDomain> {
    prop_oneof![
        (0.2f64..5.0, 4usize..80).prop_map(|(l, n)| DiscreteDomain::interval(l, n).unwrap()),
        (0.2f64..3.0, 0.2f64..3.0, 4usize..20, 4usize..20)
            .prop_map(|(a, b, n, m)| DiscreteDomain::rectangle(a, b, n, m).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric(d in domains(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let u = random_field(d, s1);
        let v = random_field(d, s2);
        let lhs = inner_l2(&laplacian(&u), &v).unwrap();
        let rhs = inner_l2(&u, &laplacian(&v)).unwrap();
        let scale = (norm_full_sq(&u) * norm_full_sq(&v)).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn summation_by_parts(d in domains(), seed in any::<u64>()) {
        let u = random_field(d, seed);
        let lap = laplacian(&u).scaled(-1.0);
        let g = norm_grad_sq(&u);
        prop_assert!((inner_l2(&lap, &u).unwrap() - g).abs() <= 1e-12 * g);
    }

    #[test]
    fn discrete_poincare(n in 4usize..64, l in 0.3f64..4.0, seed in any::<u64>()) {
        let d = DiscreteDomain::interval(l, n).unwrap();
        let u = random_field(d, seed);
        let mu = lambda1_discrete(&d).unwrap();
        prop_assert!(norm_l2_sq(&u) * mu <= norm_grad_sq(&u) * (1.0 + 1e-10));
    }

    #[test]
    fn embedding_constant_grows_with_length(l in 0.1f64..10.0, grow in 1.0f64..3.0, r in 2.0f64..20.0) {
        let a = embed_const(&DiscreteDomain::interval(l, 16).unwrap(), r, 0).unwrap();
        let b = embed_const(&DiscreteDomain::interval(l * grow, 16).unwrap(), r, 0).unwrap();
        prop_assert!(b.value >= a.value);
    }

    #[test]
    fn lambda_choice_in_open_interval(p in 2.0001f64..50.0, l1 in 1e-3f64..1e6) {
        let l = lambda_choice(p, l1);
        prop_assert!(l > 2.0 && l < p);
    }

    #[test]
    fn lower_bound_decreases_in_each_argument(
        m0 in 0.1f64..100.0, c4 in 0.01f64..10.0, c5 in 0.01f64..10.0, q in 1.2f64..4.0,
    ) {
        let t = |m: f64, a: f64, b: f64| lower_bound_integral(m, a, b, q).unwrap().t_lower;
        let base = t(m0, c4, c5);
        prop_assert!(t(1.5 * m0, c4, c5) < base);
        prop_assert!(t(m0, 1.5 * c4, c5) < base);
        prop_assert!(t(m0, c4, 1.5 * c5) < base);
    }

    #[test]
    fn print_then_parse_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, 4);
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        for _ in 0..100 {
            let p = Point::xy(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            match (e.eval(&p), back.eval(&p)) {
                (Ok(a), Ok(b)) if a.is_finite() => {
                    prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(f64::MIN_POSITIVE), "{printed}: {a} vs {b}")
                }
                (Ok(a), Ok(b)) => prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> dampwave_core::expr::Expr {
    let text = random_text(rng, depth);
    parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn random_text(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => "x".into(),
            1 => "y".into(),
            2 => "pi".into(),
            _ => format!("{}", rng.gen_range(0.0..10.0f64)),
        };
    }
    let a = random_text(rng, depth - 1);
    match rng.gen_range(0..8) {
        0 => format!("({a})+({})", random_text(rng, depth - 1)),
        1 => format!("({a})-({})", random_text(rng, depth - 1)),
        2 => format!("({a})*({})", random_text(rng, depth - 1)),
        3 => format!("({a})/({})", random_text(rng, depth - 1)),
        4 => format!("({a})^2"),
        5 => format!("-({a})"),
        _ => {
            let f = ["sin", "cos", "exp", "log", "abs", "sqrt"][rng.gen_range(0..6)];
            format!("{f}({a})")
        }
    }
}

#[test]
fn named_constants_round_trip_through_display() {
    let mut c = BTreeMap::new();
    c.insert("amp".to_string(), 0.1);
    let e = dampwave_core::expr::parse_with("amp*sin(pi*x)", &c).unwrap();
    let back = parse(&e.to_string()).unwrap();
    let p = Point::xy(0.5, 0.0);
    assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
}

#[test]
fn discrete_lambda1_converges_at_second_order() {
    let exact = lambda1(&DiscreteDomain::interval(1.0, 8).unwrap());
    let errs: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| (lambda1_discrete(&DiscreteDomain::interval(1.0, n).unwrap()).unwrap() - exact).abs())
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "ratio {r}");
    }
    assert!(errs[3] / exact < 5e-3);
}

#[test]
fn primitives_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for nl in [power(4.0).unwrap(), power(3.0).unwrap(), logpower(4.0).unwrap(), logpower(3.5).unwrap()] {
        for _ in 0..50 {
            let s: f64 = rng.gen_range(-10.0..10.0);
            let quad = adaptive_simpson(&|x| nl.f(x), 0.0, s, 1e-13);
            let big_f = nl.primitive(s);
            assert!((big_f - quad).abs() <= 1e-8 * (1.0 + big_f.abs()), "{} at {s}: {big_f} vs {quad}", nl.name);
        }
    }
}

#[test]
fn derivatives_match_central_differences_at_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for nl in [power(4.0).unwrap(), power(3.0).unwrap(), logpower(4.0).unwrap(), logpower(3.5).unwrap()] {
        for _ in 0..20 {
            let s: f64 = rng.gen_range(0.3..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let fd = |h: f64| (nl.f(s + h) - nl.f(s - h)) / (2.0 * h);
            let e1 = (nl.fprime(s) - fd(1e-2)).abs();
            let e2 = (nl.fprime(s) - fd(5e-3)).abs();
            if e1 > 1e-9 {
                let r = e1 / e2;
                assert!((3.0..=5.0).contains(&r), "{} at {s}: ratio {r}", nl.name);
            }
        }
    }
}

#[test]
fn builtins_are_odd_with_even_primitives() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for nl in [power(4.0).unwrap(), power(3.0).unwrap(), logpower(4.0).unwrap(), logpower(3.5).unwrap()] {
        for _ in 0..100 {
            let s: f64 = rng.gen_range(-20.0..20.0);
            assert_eq!(nl.f(-s), -nl.f(s));
            assert_eq!(nl.primitive(-s), nl.primitive(s));
        }
    }
}
