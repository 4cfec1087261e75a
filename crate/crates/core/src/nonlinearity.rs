//! Source nonlinearities `f`, their primitives `F(s) = ∫₀ˢ f`, derivatives,
//! and the growth constants used by the blow-up and lifespan estimates:
//!
//! * `s f(s) ≥ p F(s)` with `p > 2`,
//! * `|f(s)| ≤ α + β|s|^q`,
//! * `|f′(s)| ≤ k₀ + k₁|s|^l₁`.
//!
//! The checkers sample these inequalities on a grid. A pass is evidence, not proof.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Point, Var};
use crate::numeric::{adaptive_simpson, golden_max};

/// Exponent gap `q − (p − 1)` used for the log family's growth bounds.
pub const LOG_EXPONENT_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisParams {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub k0: f64,
    pub k1: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Power,
    LogPower,
    Custom {
        f: Expr,
        primitive: Expr,
        derivative: Option<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    kind: Kind,
    pub params: HypothesisParams,
    pub name: String,
    /// How the growth constants were obtained.
    pub note: String,
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::Config(format!("exponent p must satisfy p > 2, got {p}")));
    }
    Ok(())
}

/// `f(s) = |s|^(p−2) s`
pub fn power(p: f64) -> Result<Nonlinearity> {
    check_p(p)?;
    Ok(Nonlinearity {
        kind: Kind::Power,
        params: HypothesisParams {
            p,
            alpha: 0.0,
            beta: 1.0,
            q: p - 1.0,
            k0: 1e-12,
            k1: p - 1.0,
            l1: p - 2.0,
        },
        name: format!("power:{p}"),
        note: "exact: |f(s)| = |s|^(p-1) so alpha = 0, beta = 1, q = p-1; |f'(s)| = (p-1)|s|^(p-2)".into(),
    })
}

/// `f(s) = |s|^(p−2) s ln|s|` with `f(0) = 0`.
pub fn logpower(p: f64) -> Result<Nonlinearity> {
    check_p(p)?;
    let e = std::f64::consts::E;
    let gap = LOG_EXPONENT_GAP;
    let q = p - 1.0 + gap;
    // ln s ≤ s^gap / (e·gap) for s ≥ 1 makes |f| ≤ β s^q there exactly.
    let beta = 1.0 / (e * gap);
    // Below 1 the excess |f| − β s^q has a single interior maximum.
    let excess = |s: f64| s.powf(p - 1.0) * (-s.ln()) - beta * s.powf(q);
    let (s_star, peak) = interior_max(excess);
    let alpha = peak.max(0.0) * (1.0 + 1e-12);
    let l1 = p - 2.0 + gap;
    let k0 = (p - 1.0) / (e * (p - 2.0)) + 1.0;
    let k1 = (p - 1.0) / (e * gap) + 1.0;
    Ok(Nonlinearity {
        kind: Kind::LogPower,
        params: HypothesisParams { p, alpha, beta, q, k0, k1, l1 },
        name: format!("logpower:{p}"),
        note: format!(
            "computed: q = p-1+{gap}; beta = 1/(e*{gap}) from max_(s>=1) ln(s)/s^{gap}; \
             alpha = max_(0<s<1) (s^(p-1)|ln s| - beta s^q) = {alpha:e} at s = {s_star:.6}; \
             k0 = (p-1)/(e(p-2)) + 1, k1 = (p-1)/(e*{gap}) + 1, l1 = p-2+{gap}"
        ),
    })
}

fn interior_max<F: Fn(f64) -> f64>(g: F) -> (f64, f64) {
    // Coarse log scan to bracket, then golden refinement.
    let n = 400;
    let mut best = (0.0, f64::NEG_INFINITY);
    let grid: Vec<f64> = (0..n).map(|k| 10f64.powf(-12.0 + 12.0 * k as f64 / (n - 1) as f64)).collect();
    let mut best_k = 0;
    for (k, &s) in grid.iter().enumerate() {
        let v = g(s);
        if v > best.1 {
            best = (s, v);
            best_k = k;
        }
    }
    let lo = grid[best_k.saturating_sub(1)];
    let hi = grid[(best_k + 1).min(n - 1)];
    let refined = golden_max(&g, lo, hi, 1e-14);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// User-supplied `f` and `F` in the variable `s`; `F` is cross-checked against
/// quadrature of `f`. Without a derivative expression `f′` is approximated by
/// central differences.
pub fn custom(f: Expr, primitive: Expr, derivative: Option<Expr>, params: HypothesisParams) -> Result<Nonlinearity> {
    check_p(params.p)?;
    for e in [Some(&f), Some(&primitive), derivative.as_ref()].into_iter().flatten() {
        e.check_variables(&[Var::S])?;
    }
    if !(params.q > 1.0) {
        return Err(Error::Config(format!("q must exceed 1, got {}", params.q)));
    }
    if params.beta <= 0.0 || params.alpha < 0.0 {
        return Err(Error::Config("growth bound needs alpha >= 0 and beta > 0".into()));
    }
    let nl = Nonlinearity {
        kind: Kind::Custom { f, primitive, derivative },
        params,
        name: "custom".into(),
        note: "user-supplied constants".into(),
    };
    let f0 = nl.primitive(0.0);
    if !(f0.abs() <= 1e-12) {
        return Err(Error::Config(format!("primitive must vanish at 0, got F(0) = {f0}")));
    }
    for &s in &[-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let quad = adaptive_simpson(&|x| nl.f(x), 0.0, s, 1e-12);
        let big_f = nl.primitive(s);
        if !((big_f - quad).abs() <= 1e-6 * (1.0 + big_f.abs())) {
            return Err(Error::Config(format!(
                "primitive inconsistent with f at s = {s}: F = {big_f}, quadrature = {quad}"
            )));
        }
    }
    Ok(nl)
}

fn eval_s(e: &Expr, s: f64) -> f64 {
    e.eval(&Point { s, ..Default::default() }).unwrap_or(f64::NAN)
}

impl Nonlinearity {
    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn f(&self, s: f64) -> f64 {
        let p = self.params.p;
        match &self.kind {
            Kind::Power => s.abs().powf(p - 2.0) * s,
            Kind::LogPower => {
                if s == 0.0 {
                    0.0
                } else {
                    s.abs().powf(p - 2.0) * s * s.abs().ln()
                }
            }
            Kind::Custom { f, .. } => eval_s(f, s),
        }
    }

    /// The stored primitive `F` with `F(0) = 0`.
    pub fn primitive(&self, s: f64) -> f64 {
        let p = self.params.p;
        match &self.kind {
            Kind::Power => s.abs().powf(p) / p,
            Kind::LogPower => {
                if s == 0.0 {
                    0.0
                } else {
                    let a = s.abs().powf(p);
                    a * s.abs().ln() / p - a / (p * p)
                }
            }
            Kind::Custom { primitive, .. } => eval_s(primitive, s),
        }
    }

    pub fn fprime(&self, s: f64) -> f64 {
        let p = self.params.p;
        match &self.kind {
            Kind::Power => (p - 1.0) * s.abs().powf(p - 2.0),
            Kind::LogPower => {
                if s == 0.0 {
                    0.0
                } else {
                    let a = s.abs().powf(p - 2.0);
                    (p - 1.0) * a * s.abs().ln() + a
                }
            }
            Kind::Custom { derivative: Some(d), .. } => eval_s(d, s),
            Kind::Custom { derivative: None, .. } => {
                let h = 1e-5 * (1.0 + s.abs());
                (self.f(s + h) - self.f(s - h)) / (2.0 * h)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub hypothesis: Hypothesis,
    pub statement: String,
    pub passed: bool,
    /// Smallest raw residual (bound minus bounded quantity).
    pub worst_residual: f64,
    /// Smallest residual divided by `1 +` the magnitude of the compared terms.
    pub worst_relative: f64,
    /// Where the smallest relative residual occurred.
    pub argmin: f64,
    pub samples: usize,
    pub sampled: bool,
}

/// Relative slack allowed for floating-point rounding in the comparisons.
const CHECK_ROUNDING: f64 = 1e-12;

/// Symmetric log-spaced grid on `[−s_max, −s_max·1e−8] ∪ [s_max·1e−8, s_max]`.
pub fn check_grid(s_max: f64, n_samples: usize) -> Vec<f64> {
    let half = n_samples / 2;
    let mut pos: Vec<f64> = (0..half)
        .map(|k| s_max * 10f64.powf(-8.0 + 8.0 * k as f64 / (half - 1) as f64))
        .collect();
    if let Some(last) = pos.last_mut() {
        *last = s_max;
    }
    let mut grid: Vec<f64> = pos.iter().rev().map(|s| -s).collect();
    grid.extend(pos);
    grid
}

fn run_check<R>(
    hypothesis: Hypothesis,
    statement: String,
    s_max: f64,
    n_samples: usize,
    residual: R,
) -> Result<CheckReport>
where
    R: Fn(f64) -> (f64, f64),
{
    if !(s_max > 0.0) || n_samples < 1000 {
        return Err(Error::Config("checkers need s_max > 0 and at least 1000 samples".into()));
    }
    let mut worst_residual = f64::INFINITY;
    let mut worst_relative = f64::INFINITY;
    let mut argmin = 0.0;
    let grid = check_grid(s_max, n_samples);
    for &s in &grid {
        let (r, scale) = residual(s);
        if !r.is_finite() || !scale.is_finite() {
            return Err(Error::Checker { s });
        }
        worst_residual = worst_residual.min(r);
        let rel = r / (1.0 + scale);
        if rel < worst_relative {
            worst_relative = rel;
            argmin = s;
        }
    }
    Ok(CheckReport {
        hypothesis,
        statement,
        passed: worst_relative >= -CHECK_ROUNDING,
        worst_residual,
        worst_relative,
        argmin,
        samples: grid.len(),
        sampled: true,
    })
}

/// Residual `s f(s) − p F(s)` and the magnitude of its terms.
pub fn h1_residual(nl: &Nonlinearity, s: f64) -> (f64, f64) {
    let sf = s * nl.f(s);
    let pf = nl.params.p * nl.primitive(s);
    (sf - pf, sf.abs() + pf.abs())
}

pub fn check_h1(nl: &Nonlinearity, s_max: f64, n_samples: usize) -> Result<CheckReport> {
    let p = nl.params.p;
    run_check(Hypothesis::H1, format!("s f(s) >= {p} F(s)"), s_max, n_samples, |s| h1_residual(nl, s))
}

pub fn check_h2(nl: &Nonlinearity, s_max: f64, n_samples: usize) -> Result<CheckReport> {
    let HypothesisParams { alpha, beta, q, .. } = nl.params;
    run_check(
        Hypothesis::H2,
        format!("|f(s)| <= {alpha} + {beta}|s|^{q}"),
        s_max,
        n_samples,
        |s| {
            let bound = alpha + beta * s.abs().powf(q);
            let v = nl.f(s).abs();
            (bound - v, bound + v)
        },
    )
}

pub fn check_h3(nl: &Nonlinearity, s_max: f64, n_samples: usize) -> Result<CheckReport> {
    let HypothesisParams { k0, k1, l1, .. } = nl.params;
    run_check(
        Hypothesis::H3,
        format!("|f'(s)| <= {k0} + {k1}|s|^{l1}"),
        s_max,
        n_samples,
        |s| {
            let bound = k0 + k1 * s.abs().powf(l1);
            let v = nl.fprime(s).abs();
            (bound - v, bound + v)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn power_values() {
        let nl = power(4.0).unwrap();
        assert_eq!(nl.f(2.0), 8.0);
        assert_eq!(nl.primitive(2.0), 4.0);
        assert_eq!(nl.fprime(2.0), 12.0);
        assert_eq!(nl.f(0.0), 0.0);
        assert_eq!(nl.primitive(0.0), 0.0);
        for &s in &[-3.0, -0.5, 0.25, 7.0] {
            assert!(h1_residual(&nl, s).0.abs() <= 1e-12 * h1_residual(&nl, s).1);
        }
    }

    #[test]
    fn exponents_at_most_two_rejected() {
        assert!(matches!(power(2.0), Err(Error::Config(_))));
        assert!(matches!(logpower(1.5), Err(Error::Config(_))));
        assert!(power(f64::NAN).is_err());
    }

    #[test]
    fn logpower_values() {
        let nl = logpower(4.0).unwrap();
        assert_eq!(nl.f(1.0), 0.0);
        assert_eq!(nl.f(0.0), 0.0);
        assert_eq!(nl.primitive(0.0), 0.0);
        let ln2 = 2f64.ln();
        assert!((nl.primitive(2.0) - (4.0 * ln2 - 1.0)).abs() < 1e-14);
        let (r, _) = h1_residual(&nl, 2.0);
        assert!((r - 4.0).abs() < 1e-13);
    }

    #[test]
    fn checks_pass_for_builtins() {
        for nl in [power(4.0), power(3.0), logpower(4.0), logpower(3.5)] {
            let nl = nl.unwrap();
            for rep in [
                check_h1(&nl, 100.0, 10_000).unwrap(),
                check_h2(&nl, 100.0, 10_000).unwrap(),
                check_h3(&nl, 100.0, 10_000).unwrap(),
            ] {
                assert!(rep.passed, "{} {:?}: {rep:?}", nl.name, rep.hypothesis);
                assert!(rep.sampled);
            }
        }
    }

    #[test]
    fn power_h1_residual_is_zero() {
        let rep = check_h1(&power(4.0).unwrap(), 100.0, 10_000).unwrap();
        assert!(rep.worst_relative.abs() < 1e-14, "{rep:?}");
    }

    #[test]
    fn logpower_h1_worst_residual_is_smallest_sample() {
        let nl = logpower(4.0).unwrap();
        let rep = check_h1(&nl, 100.0, 10_000).unwrap();
        let s_min: f64 = 100.0 * 1e-8;
        let expected = s_min.powi(4) / 4.0;
        assert!(rep.worst_residual > 0.0);
        assert!((rep.worst_residual - expected).abs() <= 1e-6 * expected, "{rep:?}");
    }

    #[test]
    fn halved_beta_fails_at_the_edge() {
        let mut nl = power(4.0).unwrap();
        nl.params.beta = 0.5;
        let rep = check_h2(&nl, 100.0, 10_000).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.argmin.abs(), 100.0);
    }

    #[test]
    fn checker_rejects_bad_grid_and_nonfinite() {
        let nl = power(4.0).unwrap();
        assert!(check_h1(&nl, 100.0, 10).is_err());
        let bad = custom(
            parse("1/s").unwrap_or(Expr::Num(0.0)),
            parse("0").unwrap(),
            None,
            nl.params,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn logpower_constants_are_tight_enough() {
        let nl = logpower(4.0).unwrap();
        assert!(nl.params.q > 3.0 && nl.params.q < 3.2);
        assert!(nl.params.alpha > 0.0 && nl.params.alpha < 1.0 / (std::f64::consts::E * 3.0));
    }

    #[test]
    fn custom_cubic_matches_power() {
        let nl = custom(
            parse("s^3").unwrap(),
            parse("s^4/4").unwrap(),
            None,
            power(4.0).unwrap().params,
        )
        .unwrap();
        assert!((nl.f(1.5) - 3.375).abs() < 1e-14);
        assert!((nl.fprime(1.5) - 6.75).abs() < 1e-8);
        let wrong = custom(parse("s^3").unwrap(), parse("s^4/3").unwrap(), None, nl.params);
        assert!(matches!(wrong, Err(Error::Config(_))));
    }
}
