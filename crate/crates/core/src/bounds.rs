//! Blow-up criteria and explicit bounds on the blow-up time.
//!
//! Upper bound: a concavity argument on
//! `G(t) = ∫₀ᵗ‖u‖² + ‖u‖₂² + (T − t)‖u₀‖² + b(t + η)²` gives, for admissible `η`,
//!
//! ```text
//! T(η, b) = 2(‖u₀‖₂² + bη²) / ((λ − 2)bη − a),    a = 2‖u₀‖² − (λ − 2)(u₀, u₁)
//! ```
//!
//! minimized at `η₀ = (√(a² + (λ−2)²b‖u₀‖₂²) + a) / ((λ−2)b)`.
//!
//! Lower bound: `M′ ≤ C₄ + C₅ M^q` for `M = ‖u_t‖₂² + ‖∇u‖₂²`, so
//! `T_max ≥ ∫_{M(0)}^∞ ds / (C₄ + C₅ s^q)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{energy, nehari, potential};
use crate::mesh::{embed_const, lambda1, norm_full_sq, norm_grad_sq, norm_l2_sq, inner_l2, EmbeddingConstant, Field};
use crate::nonlinearity::Nonlinearity;
use crate::numeric::adaptive_simpson;

/// `4p(1 + λ₁) / ((p − 2)λ₁)`, the energy multiplier in the high-energy criterion.
pub fn threshold_factor(p: f64, lambda1: f64) -> f64 {
    4.0 * p * (1.0 + lambda1) / ((p - 2.0) * lambda1)
}

/// `λ = p − (p − 2)λ₁/(1 + λ₁)`, always in `(2, p)`.
pub fn lambda_choice(p: f64, lambda1: f64) -> f64 {
    p - (p - 2.0) * lambda1 / (1.0 + lambda1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Criterion {
    pub holds: bool,
    pub margin: f64,
}

/// Initial quantities shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialData {
    pub e0: f64,
    pub i0: f64,
    pub k0: f64,
    /// `M(0) = ‖u₁‖₂² + ‖∇u₀‖₂²`
    pub m0: f64,
    pub u0_l2_sq: f64,
    pub u0_full_sq: f64,
    /// `(u₀, u₁)` in L²
    pub u0u1: f64,
    pub lambda1: f64,
}

impl InitialData {
    pub fn evaluate(u0: &Field, v0: &Field, nl: &Nonlinearity) -> Result<Self> {
        let u0u1 = inner_l2(u0, v0)?;
        let u0_full_sq = norm_full_sq(u0);
        Ok(InitialData {
            e0: energy(u0, v0, nl)?,
            i0: nehari(u0, nl)?,
            k0: u0_full_sq + 2.0 * u0u1,
            m0: norm_l2_sq(v0) + norm_grad_sq(u0),
            u0_l2_sq: norm_l2_sq(u0),
            u0_full_sq,
            u0u1,
            lambda1: lambda1(u0.domain()),
        })
    }
}

/// Holds iff `K(0) > threshold·E(0)` and `I(u₀) < 0`; the margin is `K(0) − threshold·E(0)`.
pub fn criterion_high_energy(u0: &Field, v0: &Field, nl: &Nonlinearity) -> Result<Criterion> {
    let init = InitialData::evaluate(u0, v0, nl)?;
    Ok(high_energy_from(&init, nl.p()))
}

fn high_energy_from(init: &InitialData, p: f64) -> Criterion {
    let margin = init.k0 - threshold_factor(p, init.lambda1) * init.e0;
    Criterion {
        holds: margin > 0.0 && init.i0 < 0.0,
        margin,
    }
}

/// Holds iff `E(0) < 0`; the margin is `−E(0)`.
pub fn criterion_neg_energy(u0: &Field, v0: &Field, nl: &Nonlinearity) -> Result<Criterion> {
    let init = InitialData::evaluate(u0, v0, nl)?;
    Ok(neg_energy_from(&init))
}

fn neg_energy_from(init: &InitialData) -> Criterion {
    Criterion {
        holds: init.e0 < 0.0,
        margin: -init.e0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperVariant {
    /// Criterion on `K(0)` against the energy, with the λ choice above.
    HighEnergy,
    /// `E(0) < 0`, with `λ = p` and `b = −2E(0)`.
    NegativeEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    pub variant: UpperVariant,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub t_upper: f64,
}

/// `T(η, b)`; infinite where `η` is not admissible.
pub fn t_of_eta_b(lambda: f64, a: f64, b: f64, eta: f64, u0_l2_sq: f64) -> f64 {
    let denom = (lambda - 2.0) * b * eta - a;
    if denom <= 0.0 || eta <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * (u0_l2_sq + b * eta * eta) / denom
}

fn minimized(variant: UpperVariant, lambda: f64, a: f64, b: f64, u0_l2_sq: f64) -> UpperBound {
    let k = lambda - 2.0;
    let root = (a * a + k * k * b * u0_l2_sq).sqrt();
    UpperBound {
        variant,
        lambda,
        a,
        b,
        eta: (root + a) / (k * b),
        t_upper: 4.0 * (root + a) / (k * k * b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBoundReport {
    pub high_energy: Option<UpperBound>,
    pub negative_energy: Option<UpperBound>,
    /// The smaller of the applicable variants.
    pub best: UpperBound,
}

/// Upper bound on the blow-up time from whichever criteria hold.
pub fn upper_bound(u0: &Field, v0: &Field, nl: &Nonlinearity) -> Result<UpperBoundReport> {
    let init = InitialData::evaluate(u0, v0, nl)?;
    upper_from(&init, nl.p())
}

fn upper_from(init: &InitialData, p: f64) -> Result<UpperBoundReport> {
    let crit = high_energy_from(init, p);
    let high_energy = crit.holds.then(|| {
        let lambda = lambda_choice(p, init.lambda1);
        let a = 2.0 * init.u0_full_sq - (lambda - 2.0) * init.u0u1;
        let b0 = (p - 2.0) * init.lambda1 / (2.0 * lambda * (1.0 + init.lambda1)) * crit.margin;
        minimized(UpperVariant::HighEnergy, lambda, a, b0, init.u0_l2_sq)
    });
    let negative_energy = (init.e0 < 0.0).then(|| {
        let a = 2.0 * init.u0_full_sq - (p - 2.0) * init.u0u1;
        minimized(UpperVariant::NegativeEnergy, p, a, -2.0 * init.e0, init.u0_l2_sq)
    });
    let best = match (high_energy, negative_energy) {
        (Some(h), Some(n)) => {
            if n.t_upper < h.t_upper {
                n
            } else {
                h
            }
        }
        (Some(h), None) => h,
        (None, Some(n)) => n,
        (None, None) => {
            return Err(Error::Precondition {
                message: "neither the high-energy criterion nor E(0) < 0 holds".into(),
                margin: crit.margin,
            })
        }
    };
    Ok(UpperBoundReport {
        high_energy,
        negative_energy,
        best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub c4: f64,
    pub c5: f64,
    pub q: f64,
    pub embedding: EmbeddingConstant,
    pub certified: bool,
    pub derivation_note: String,
}

/// `C₄ = α²|Ω|`, `C₅ = β² S_{2q}^{2q}` for `M′ ≤ C₄ + C₅ M^q`.
pub fn derive_constants(nl: &Nonlinearity, domain: &crate::mesh::DiscreteDomain, seed: u64) -> Result<GrowthConstants> {
    let hp = nl.params;
    if !(hp.q > 1.0 && hp.q.is_finite()) {
        return Err(Error::Config(format!("growth exponent q must exceed 1, got {}", hp.q)));
    }
    let s = embed_const(domain, 2.0 * hp.q, seed)?;
    let measure = domain.measure();
    let c4 = hp.alpha * hp.alpha * measure;
    let c5 = hp.beta * hp.beta * s.value.powf(2.0 * hp.q);
    let flag = if s.certified { "certified" } else { "estimated, not certified" };
    let derivation_note = format!(
        "M'(t) = -2||u_t||^2 + 2(f(u), u_t) <= -2||u_t||^2 + 2 alpha int|u_t| + 2 beta int|u_t||u|^q; \
         int|u_t| <= |Omega|^(1/2) ||u_t||_2; \
         int|u_t||u|^q <= ||u_t||_2 ||u||_(2q)^q <= ||u_t||_2 S_(2q)^q ||grad u||_2^q; \
         Young with eps = 1: 2xy <= x^2 + y^2 absorbs both ||u_t||_2^2 terms into 2||u_t||^2, so \
         M' <= alpha^2 |Omega| + beta^2 S_(2q)^(2q) ||grad u||_2^(2q) <= C4 + C5 M^q; \
         |Omega| = {measure}, S_(2q) = {} ({flag}; {}), C4 = {c4:e}, C5 = {c5:e}, q = {}",
        s.value, s.formula, hp.q
    );
    Ok(GrowthConstants {
        c4,
        c5,
        q: hp.q,
        certified: s.certified,
        embedding: s,
        derivation_note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub m0: f64,
    pub t_lower: f64,
    pub method: LowerMethod,
    /// Upper end of the quadrature range when `method` is quadrature.
    pub s_star: Option<f64>,
}

/// Relative tolerance of the lower-bound quadrature.
pub const LOWER_QUAD_TOL: f64 = 1e-10;

/// `∫_{m0}^∞ ds / (c4 + c5 s^q)`.
pub fn lower_bound_integral(m0: f64, c4: f64, c5: f64, q: f64) -> Result<LowerBound> {
    if !(m0 > 0.0) {
        return Err(Error::Degenerate(
            "M(0) = 0: no blow-up from zero data, lower bound undefined".into(),
        ));
    }
    if !(q > 1.0) || !(c5 > 0.0) || c4 < 0.0 {
        return Err(Error::Config(format!(
            "lower bound needs q > 1, C5 > 0, C4 >= 0; got q = {q}, C5 = {c5}, C4 = {c4}"
        )));
    }
    let tail = |s: f64| s.powf(1.0 - q) / (c5 * (q - 1.0));
    if c4 == 0.0 {
        return Ok(LowerBound {
            m0,
            t_lower: tail(m0),
            method: LowerMethod::ClosedForm,
            s_star: None,
        });
    }
    // In log space the integrand e^x/(C₄ + C₅e^{qx}) is smooth and decays on both sides.
    let integrand = |x: f64| {
        let s = x.exp();
        s / (c4 + c5 * s.powf(q))
    };
    let crossover = (c4 / c5).powf(1.0 / q);
    let mut s_star = (2.0 * m0).max(crossover);
    let x0 = m0.ln();
    loop {
        let body = adaptive_simpson(&integrand, x0, s_star.ln(), LOWER_QUAD_TOL);
        let t = tail(s_star);
        if t <= 1e-12 * body || !s_star.is_finite() {
            return Ok(LowerBound {
                m0,
                t_lower: body + t,
                method: LowerMethod::Quadrature,
                s_star: Some(s_star),
            });
        }
        s_star *= 2.0;
    }
}

/// Lower bound on the blow-up time for the given initial data.
pub fn lower_bound(u0: &Field, v0: &Field, nl: &Nonlinearity, seed: u64) -> Result<(LowerBound, GrowthConstants)> {
    if u0.domain() != v0.domain() {
        return Err(Error::Usage("u0 and v0 live on different domains".into()));
    }
    let m0 = norm_l2_sq(v0) + norm_grad_sq(u0);
    let constants = derive_constants(nl, u0.domain(), seed)?;
    let lb = lower_bound_integral(m0, constants.c4, constants.c5, constants.q)?;
    Ok((lb, constants))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub initial: InitialData,
    pub threshold_factor: f64,
    pub criterion_high_energy: Criterion,
    pub criterion_neg_energy: Criterion,
    pub upper: Option<UpperBoundReport>,
    pub upper_error: Option<String>,
    pub constants: Option<GrowthConstants>,
    pub lower: Option<LowerBound>,
    pub lower_error: Option<String>,
    pub formulas: Formulas,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Formulas {
    pub lambda: &'static str,
    pub a: &'static str,
    pub b0: &'static str,
    pub t_upper: &'static str,
    pub negative_energy: &'static str,
    pub t_lower: &'static str,
}

const FORMULAS: Formulas = Formulas {
    lambda: "p - (p-2) lambda1/(1+lambda1)",
    a: "2||u0||^2 - (lambda-2)(u0,u1)",
    b0: "(p-2) lambda1/(2 lambda (1+lambda1)) * margin",
    t_upper: "4[(a^2 + (lambda-2)^2 b ||u0||_2^2)^(1/2) + a]/((lambda-2)^2 b)",
    negative_energy: "same minimization with lambda = p, b = -2E(0)",
    t_lower: "int_M0^inf ds/(C4 + C5 s^q); closed form M0^(1-q)/(C5 (q-1)) when C4 = 0",
};

/// Every criterion and bound for `(u0, v0)`; bounds that do not apply are
/// reported with the reason instead of failing the whole report.
pub fn bounds_report(u0: &Field, v0: &Field, nl: &Nonlinearity, seed: u64) -> Result<BoundsReport> {
    let initial = InitialData::evaluate(u0, v0, nl)?;
    let p = nl.p();
    let (upper, upper_error) = match upper_from(&initial, p) {
        Ok(u) => (Some(u), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let constants = derive_constants(nl, u0.domain(), seed)?;
    let (lower, lower_error) = match lower_bound_integral(initial.m0, constants.c4, constants.c5, constants.q) {
        Ok(l) => (Some(l), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(BoundsReport {
        threshold_factor: threshold_factor(p, initial.lambda1),
        criterion_high_energy: high_energy_from(&initial, p),
        criterion_neg_energy: neg_energy_from(&initial),
        initial,
        upper,
        upper_error,
        constants: Some(constants),
        lower,
        lower_error,
        formulas: FORMULAS,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighEnergyData {
    pub u0: Field,
    pub v0: Field,
    pub alpha: f64,
    pub beta: f64,
}

const ALPHA_CAP: f64 = 1152921504606846976.0; // 2^60

/// Scales `(ū₀, ū₁)` to `(αū₀, βū₁)` with `E(0) = h`, `I(αū₀) < 0` and the
/// high-energy criterion holding. `α` doubles from 1; `β` solves the energy equation.
pub fn construct_high_energy_data(ubar0: &Field, ubar1: &Field, h: f64, nl: &Nonlinearity) -> Result<HighEnergyData> {
    let pair = inner_l2(ubar0, ubar1)?;
    if !(pair > 0.0) {
        return Err(Error::Precondition {
            message: "construction needs (ubar0, ubar1) > 0".into(),
            margin: pair,
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("target energy must be positive, got {h}")));
    }
    let v_l2 = norm_l2_sq(ubar1);
    let factor = threshold_factor(nl.p(), lambda1(ubar0.domain()));
    let mut alpha: f64 = 1.0;
    let mut last = String::new();
    while alpha <= ALPHA_CAP {
        let u0 = ubar0.scaled(alpha);
        let i = nehari(&u0, nl);
        let f = potential(&u0, nl);
        if let (Ok(i), Ok(f)) = (i, f) {
            let radicand = 2.0 * (h - 0.5 * norm_grad_sq(&u0) + f) / v_l2;
            let big = norm_full_sq(&u0) > factor * h;
            if i < 0.0 && big && radicand > 0.0 {
                let beta = radicand.sqrt();
                return Ok(HighEnergyData {
                    v0: ubar1.scaled(beta),
                    u0,
                    alpha,
                    beta,
                });
            }
            last = format!("I = {i:e}, ||u0||^2 = {:e} vs {:e}, radicand = {radicand:e}", norm_full_sq(&u0), factor * h);
        } else {
            last = "functionals overflowed".into();
        }
        alpha *= 2.0;
    }
    Err(Error::Construction(format!("alpha exceeded 2^60 ({last})")))
}
