//! Monitored quantities along a trajectory: energy `E`, Nehari functional `I`,
//! `K = ‖u‖² + 2(u, u_t)`, `M = ‖u_t‖₂² + ‖∇u‖₂²`, the blow-up quantity
//! `Q = ∫₀ᵗ‖u‖² + ‖u‖₂²`, the energy-identity defect, and the concavity
//! diagnostic for the auxiliary functional
//!
//! ```text
//! G(t) = ∫₀ᵗ‖u‖² dτ + ‖u(t)‖₂² + (T − t)‖u₀‖² + b(t + η)².
//! ```
//!
//! Time integrals are accumulated by the integrator; this module only reads them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::State;
use crate::mesh::{grad_dot, l2_dot, Field};
use crate::nonlinearity::Nonlinearity;
use crate::numeric::csum;

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("overflow evaluating {what}")))
    }
}

fn check_pair(u: &Field, v: &Field) -> Result<()> {
    if u.domain() != v.domain() {
        return Err(Error::Usage("fields live on different domains".into()));
    }
    Ok(())
}

/// `∫ F(u)` by the rectangle rule.
pub fn potential(u: &Field, nl: &Nonlinearity) -> Result<f64> {
    let s = csum(u.values().iter().map(|&x| nl.primitive(x)));
    finite(u.domain().cell_volume() * s, "∫F(u)")
}

/// `E = ½‖v‖₂² + ½‖∇u‖₂² − ∫F(u)`
pub fn energy(u: &Field, v: &Field, nl: &Nonlinearity) -> Result<f64> {
    check_pair(u, v)?;
    let d = u.domain();
    let kinetic = 0.5 * l2_dot(d, v.values(), v.values());
    let elastic = 0.5 * grad_dot(d, u.values(), u.values());
    finite(kinetic + elastic - potential(u, nl)?, "energy")
}

/// `I(u) = ‖∇u‖₂² − ∫ f(u) u`; `u` lies in the unstable set iff this is negative.
pub fn nehari(u: &Field, nl: &Nonlinearity) -> Result<f64> {
    let d = u.domain();
    let fu = csum(u.values().iter().map(|&x| nl.f(x) * x));
    finite(grad_dot(d, u.values(), u.values()) - d.cell_volume() * fu, "Nehari functional")
}

pub fn k_functional(u: &Field, v: &Field) -> Result<f64> {
    check_pair(u, v)?;
    let d = u.domain();
    let (u, v) = (u.values(), v.values());
    Ok(l2_dot(d, u, u) + grad_dot(d, u, u) + 2.0 * l2_dot(d, u, v))
}

pub fn m_functional(u: &Field, v: &Field) -> Result<f64> {
    check_pair(u, v)?;
    let d = u.domain();
    Ok(l2_dot(d, v.values(), v.values()) + grad_dot(d, u.values(), u.values()))
}

/// `Q(t) = ∫₀ᵗ‖u‖² dτ + ‖u(t)‖₂²`, the quantity whose divergence defines blow-up.
pub fn q_functional(state: &State) -> f64 {
    let u = state.u.values();
    state.acc_unorm + l2_dot(state.u.domain(), u, u)
}

/// One recorded sample of a trajectory. The first nine fields form the CSV
/// schema; the rest feed the concavity diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalRow {
    pub t: f64,
    pub energy: f64,
    pub nehari: f64,
    pub k: f64,
    pub m: f64,
    pub q: f64,
    pub sup_abs_u: f64,
    pub dt: f64,
    pub energy_residual: f64,
    pub u_l2_sq: f64,
    pub u_grad_sq: f64,
    pub v_l2_sq: f64,
    pub uv: f64,
    pub acc_dissipation: f64,
    pub acc_unorm: f64,
    pub acc_cross: f64,
}

pub const CSV_HEADER: &str = "t,E,I,K,M,Q,sup_abs_u,dt,energy_residual";

impl FunctionalRow {
    /// Evaluates every functional at `state`; `e0` is the initial energy.
    pub fn evaluate(state: &State, nl: &Nonlinearity, e0: Option<f64>, dt: f64) -> Result<Self> {
        let d = state.u.domain();
        let (u, v) = (state.u.values(), state.v.values());
        let u_l2_sq = l2_dot(d, u, u);
        let u_grad_sq = grad_dot(d, u, u);
        let v_l2_sq = l2_dot(d, v, v);
        let uv = l2_dot(d, u, v);
        let e = energy(&state.u, &state.v, nl)?;
        let e0 = e0.unwrap_or(e);
        Ok(FunctionalRow {
            t: state.t,
            energy: e,
            nehari: nehari(&state.u, nl)?,
            k: u_l2_sq + u_grad_sq + 2.0 * uv,
            m: v_l2_sq + u_grad_sq,
            q: state.acc_unorm + u_l2_sq,
            sup_abs_u: state.u.sup_norm(),
            dt,
            energy_residual: e + state.acc_dissipation - e0,
            u_l2_sq,
            u_grad_sq,
            v_l2_sq,
            uv,
            acc_dissipation: state.acc_dissipation,
            acc_unorm: state.acc_unorm,
            acc_cross: state.acc_cross,
        })
    }

    pub fn csv_values(&self) -> [f64; 9] {
        [
            self.t,
            self.energy,
            self.nehari,
            self.k,
            self.m,
            self.q,
            self.sup_abs_u,
            self.dt,
            self.energy_residual,
        ]
    }
}

/// Recorded time series of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub rows: Vec<FunctionalRow>,
    /// Growth exponent `p` of the nonlinearity, used by blow-up extrapolation.
    pub exponent: f64,
    /// Whether the run stopped on blow-up evidence (threshold or overflow).
    pub ended_in_blowup: bool,
}

/// `E(t) + ∫₀ᵗ‖u_τ‖² − E(0)` at the last row of `rows`.
pub fn energy_residual(rows: &[FunctionalRow]) -> f64 {
    match (rows.first(), rows.last()) {
        (Some(first), Some(last)) => last.energy + last.acc_dissipation - first.energy,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcavityReport {
    /// Minimum over recorded times of `G G″ − ((λ+2)/4)(G′)²`.
    pub min_defect: f64,
    pub argmin_t: f64,
    /// Largest `G |G″|` seen, the natural scale for the defect.
    pub max_scale: f64,
    /// Smallest `G` seen (must stay positive).
    pub min_g: f64,
}

/// `(G, G′, G″)` at one row, from the closed forms
/// `G′ = 2(u, u_t) + 2∫⟨u, u_τ⟩ + 2b(t+η)` and `G″ = 2[‖u_t‖₂² − I(u)] + 2b`.
pub fn auxiliary_g(row: &FunctionalRow, u0_full_sq: f64, b: f64, eta: f64, horizon: f64) -> (f64, f64, f64) {
    let s = row.t + eta;
    let g = row.acc_unorm + row.u_l2_sq + (horizon - row.t) * u0_full_sq + b * s * s;
    let g1 = 2.0 * row.uv + 2.0 * row.acc_cross + 2.0 * b * s;
    let g2 = 2.0 * (row.v_l2_sq - row.nehari) + 2.0 * b;
    (g, g1, g2)
}

pub fn concavity_check(trace: &Trace, lambda: f64, b: f64, eta: f64, horizon: f64) -> Result<ConcavityReport> {
    let first = trace
        .rows
        .first()
        .ok_or_else(|| Error::Usage("concavity check needs a non-empty trace".into()))?;
    if first.t != 0.0 || first.acc_unorm != 0.0 || first.acc_cross != 0.0 {
        return Err(Error::Usage(
            "concavity check needs a trace starting at t = 0 with zeroed accumulators".into(),
        ));
    }
    let u0_full_sq = first.u_l2_sq + first.u_grad_sq;
    let mut report = ConcavityReport {
        min_defect: f64::INFINITY,
        argmin_t: 0.0,
        max_scale: 0.0,
        min_g: f64::INFINITY,
    };
    for row in &trace.rows {
        let (g, g1, g2) = auxiliary_g(row, u0_full_sq, b, eta, horizon);
        let defect = g * g2 - 0.25 * (lambda + 2.0) * g1 * g1;
        if defect < report.min_defect {
            report.min_defect = defect;
            report.argmin_t = row.t;
        }
        report.max_scale = report.max_scale.max((g * g2).abs());
        report.min_g = report.min_g.min(g);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub pairs_checked: usize,
    pub violations: usize,
    /// Most negative `K(t_{i+1}) − K(t_i)` relative to `K(t_i)` among checked pairs.
    pub worst_relative_change: f64,
}

/// Checks that `K` increases between consecutive rows where `I < 0` at both ends.
/// A decrease larger than `rel_tol · |K|` counts as a violation.
pub fn k_monotonicity(trace: &Trace, rel_tol: f64) -> MonotonicityReport {
    let mut rep = MonotonicityReport {
        pairs_checked: 0,
        violations: 0,
        worst_relative_change: f64::INFINITY,
    };
    for w in trace.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.nehari.max(b.nehari) >= 0.0 {
            continue;
        }
        rep.pairs_checked += 1;
        let change = (b.k - a.k) / a.k.abs().max(f64::MIN_POSITIVE);
        rep.worst_relative_change = rep.worst_relative_change.min(change);
        if b.k - a.k <= -rel_tol * a.k.abs() {
            rep.violations += 1;
        }
    }
    rep
}
