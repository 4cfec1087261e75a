use std::f64::consts::PI;

use dampwave_core::bounds::{
    bounds_report, construct_high_energy_data, criterion_high_energy, derive_constants, lambda_choice,
    lower_bound, t_of_eta_b, upper_bound, InitialData, LowerMethod, UpperVariant,
};
use dampwave_core::expr::parse;
use dampwave_core::functionals::energy;
use dampwave_core::mesh::{norm_grad_sq, norm_l2_sq};
use dampwave_core::nonlinearity::{custom, logpower, power, HypothesisParams};
use dampwave_core::{DiscreteDomain, Error, Field};

// Continuum values for u0 = 6 sin(πx), u1 = 0, f(s) = s³ on (0, 1).
const E0: f64 = -32.6735603902;
const I0: f64 = -308.347120780;
const MARGIN: f64 = 483.525552842;
const LAMBDA: f64 = 2.18399933670;
const A: f64 = 391.305758439;
const B0: f64 = 201.026325862;
const ETA0: f64 = 21.1623494736;
const T_UPPER_MAIN: f64 = 460.052733952;
const B_NEG: f64 = 65.3471207804;
const T_UPPER_NEG: f64 = 12.0675239308;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn six_sine(n: usize) -> (Field, Field) {
    let d = DiscreteDomain::interval(1.0, n).unwrap();
    (Field::from_fn(d, |x, _| 6.0 * (PI * x).sin()).unwrap(), Field::zeros(d))
}

#[test]
fn six_sine_fixtures() {
    let (u0, v0) = six_sine(256);
    let nl = power(4.0).unwrap();
    let init = InitialData::evaluate(&u0, &v0, &nl).unwrap();
    assert!(rel(init.e0, E0) < 1e-4);
    assert!(rel(init.i0, I0) < 1e-4);
    let crit = criterion_high_energy(&u0, &v0, &nl).unwrap();
    assert!(crit.holds);
    assert!(rel(crit.margin, MARGIN) < 1e-4);

    let up = upper_bound(&u0, &v0, &nl).unwrap();
    let main = up.high_energy.unwrap();
    assert!(rel(main.lambda, LAMBDA) < 1e-10);
    assert!(rel(main.a, A) < 1e-4);
    assert!(rel(main.b, B0) < 1e-4);
    assert!(rel(main.eta, ETA0) < 1e-4);
    assert!(rel(main.t_upper, T_UPPER_MAIN) < 1e-4);
    let neg = up.negative_energy.unwrap();
    assert_eq!(neg.lambda, 4.0);
    assert!(rel(neg.b, B_NEG) < 1e-4);
    assert!(rel(neg.t_upper, T_UPPER_NEG) < 1e-4);
    assert_eq!(up.best.variant, UpperVariant::NegativeEnergy);
}

#[test]
fn b0_is_the_right_endpoint() {
    let (u0, v0) = six_sine(128);
    let nl = power(4.0).unwrap();
    let l1 = PI * PI;
    let up = upper_bound(&u0, &v0, &nl).unwrap().high_energy.unwrap();
    let margin = criterion_high_energy(&u0, &v0, &nl).unwrap().margin;
    let back = up.b * 2.0 * up.lambda * (1.0 + l1) / (2.0 * l1);
    assert!(rel(back, margin) < 1e-12);
}

#[test]
fn eta0_minimizes_the_bound() {
    let (u0, v0) = six_sine(128);
    let nl = power(4.0).unwrap();
    let up = upper_bound(&u0, &v0, &nl).unwrap();
    let l2 = norm_l2_sq(&u0);
    for b in [up.high_energy.unwrap(), up.negative_energy.unwrap()] {
        assert!(rel(t_of_eta_b(b.lambda, b.a, b.b, b.eta, l2), b.t_upper) < 1e-12);
        for k in -400..=400 {
            let eta = b.eta * 10f64.powf(k as f64 / 200.0);
            assert!(t_of_eta_b(b.lambda, b.a, b.b, eta, l2) >= b.t_upper * (1.0 - 1e-9));
        }
    }
}

#[test]
fn lambda_ignores_the_data() {
    let nl = power(4.0).unwrap();
    for amp in [6.0, 10.0, 20.0] {
        let d = DiscreteDomain::interval(1.0, 64).unwrap();
        let u0 = Field::from_fn(d, |x, _| amp * (PI * x).sin()).unwrap();
        let up = upper_bound(&u0, &Field::zeros(d), &nl).unwrap();
        assert_eq!(up.high_energy.unwrap().lambda, lambda_choice(4.0, PI * PI));
    }
}

#[test]
fn criterion_fails_for_zero_and_small_data() {
    let nl = power(4.0).unwrap();
    let d = DiscreteDomain::interval(1.0, 64).unwrap();
    let zero = Field::zeros(d);
    let c = criterion_high_energy(&zero, &zero, &nl).unwrap();
    assert!(!c.holds);
    let small = Field::from_fn(d, |x, _| 0.1 * (PI * x).sin()).unwrap();
    assert!(!criterion_high_energy(&small, &zero, &nl).unwrap().holds);
}

#[test]
fn lower_bound_fixture() {
    let (u0, v0) = six_sine(256);
    let nl = power(4.0).unwrap();
    let (lb, constants) = lower_bound(&u0, &v0, &nl, 0).unwrap();
    assert_eq!(lb.method, LowerMethod::ClosedForm);
    assert_eq!(constants.c4, 0.0);
    assert!(rel(constants.c5, 1.0 / 64.0) < 1e-15);
    let m0 = norm_grad_sq(&u0);
    assert!(rel(lb.t_lower, 32.0 / (m0 * m0)) < 1e-12);
    assert!(rel(lb.t_lower, 32.0 / (18.0 * PI * PI).powi(2)) < 1e-4);
}

#[test]
fn zero_data_lower_bound_is_degenerate() {
    let d = DiscreteDomain::interval(1.0, 32).unwrap();
    let z = Field::zeros(d);
    let r = lower_bound(&z, &z, &power(4.0).unwrap(), 0);
    assert!(matches!(r, Err(Error::Degenerate(_))));
}

#[test]
fn constants_follow_growth_parameters() {
    let d = DiscreteDomain::interval(1.0, 32).unwrap();
    let params = HypothesisParams { p: 4.0, alpha: 1.0, beta: 1.0, q: 3.0, k0: 1.0, k1: 3.0, l1: 2.0 };
    let cubic = || custom(parse("s^3").unwrap(), parse("s^4/4").unwrap(), None, params).unwrap();
    let nl = cubic();
    let c = derive_constants(&nl, &d, 0).unwrap();
    assert_eq!(c.c4, 1.0);
    assert!(rel(c.c5, 1.0 / 64.0) < 1e-15);
    let mut doubled = cubic();
    doubled.params.beta = 2.0;
    let c2 = derive_constants(&doubled, &d, 0).unwrap();
    assert_eq!(c2.c4, c.c4);
    assert!(rel(c2.c5, 4.0 * c.c5) < 1e-15);
}

#[test]
fn logpower_lower_bound_uses_quadrature() {
    let d = DiscreteDomain::interval(1.0, 64).unwrap();
    let u0 = Field::from_fn(d, |x, _| 6.0 * (PI * x).sin()).unwrap();
    let (lb, c) = lower_bound(&u0, &Field::zeros(d), &logpower(4.0).unwrap(), 0).unwrap();
    assert!(c.c4 > 0.0);
    assert_eq!(lb.method, LowerMethod::Quadrature);
    assert!(lb.t_lower > 0.0 && lb.t_lower.is_finite());
}

#[test]
fn two_dimensional_constants_are_estimated() {
    let d = DiscreteDomain::rectangle(1.0, 1.0, 12, 12).unwrap();
    let u0 = Field::from_fn(d, |x, y| 10.0 * (PI * x).sin() * (PI * y).sin()).unwrap();
    let report = bounds_report(&u0, &Field::zeros(d), &power(4.0).unwrap(), 1).unwrap();
    let c = report.constants.unwrap();
    assert!(!c.certified);
    assert!(c.derivation_note.contains("estimated"));
}

#[test]
fn high_energy_construction_hits_target() {
    let d = DiscreteDomain::interval(1.0, 128).unwrap();
    let s = Field::from_fn(d, |x, _| (PI * x).sin()).unwrap();
    let nl = power(4.0).unwrap();
    let mut last_alpha = 0.0;
    for h in [1.0, 10.0, 100.0, 1000.0] {
        let data = construct_high_energy_data(&s, &s, h, &nl).unwrap();
        let e = energy(&data.u0, &data.v0, &nl).unwrap();
        assert!((e - h).abs() <= 1e-8 * (1.0 + h), "{h}: {e}");
        let crit = criterion_high_energy(&data.u0, &data.v0, &nl).unwrap();
        assert!(crit.holds && crit.margin > 0.0);
        assert!(data.alpha >= last_alpha);
        last_alpha = data.alpha;
    }
}

#[test]
fn construction_needs_positive_pairing() {
    let d = DiscreteDomain::interval(1.0, 32).unwrap();
    let s = Field::from_fn(d, |x, _| (PI * x).sin()).unwrap();
    let r = construct_high_energy_data(&s, &s.scaled(-1.0), 10.0, &power(4.0).unwrap());
    assert!(matches!(r, Err(Error::Precondition { .. })));
}
