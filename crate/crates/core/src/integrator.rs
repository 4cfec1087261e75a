//! IMEX time stepping for the first-order system
//!
//! ```text
//! u_t = v,    v_t = Δu + Δv − v + f(u) + g(x, t)
//! ```
//!
//! The linear terms use the implicit midpoint (Crank–Nicolson) rule; `f(u)`
//! and the source `g` are evaluated explicitly at the step midpoint, first
//! from the predictor `u + dt·v` and then once more from the corrected
//! state. Each pass solves one SPD system
//!
//! ```text
//! (1 + dt/2) w − (dt/2)(1 + dt/2) Δ w = v + dt Δu + (dt/2)(1 + dt/2) Δv − (dt/2) v + dt (f̄ + ḡ)
//! ```
//!
//! for the new velocity `w`, by Thomas elimination in 1D and conjugate
//! gradients in 2D.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{sample_at_time, Expr, Var};
use crate::functionals::{FunctionalRow, Trace};
use crate::linalg::{conjugate_gradient, solve_tridiagonal_const};
use crate::mesh::{apply_laplacian, grad_dot, l2_dot, DiscreteDomain, Field};
use crate::nonlinearity::Nonlinearity;

/// Relative residual for the 2D conjugate-gradient solves.
pub const CG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    /// `u_t`
    pub v: Field,
    pub t: f64,
    /// `∫₀ᵗ ‖u_τ‖² dτ` (full H¹ norm)
    pub acc_dissipation: f64,
    /// `∫₀ᵗ ‖u‖² dτ`
    pub acc_unorm: f64,
    /// `∫₀ᵗ ⟨u, u_τ⟩ dτ` (H¹ inner product)
    pub acc_cross: f64,
}

impl State {
    pub fn initial(u0: Field, v0: Field) -> Result<Self> {
        if u0.domain() != v0.domain() {
            return Err(Error::Usage("u0 and v0 live on different domains".into()));
        }
        Ok(State {
            u: u0,
            v: v0,
            t: 0.0,
            acc_dissipation: 0.0,
            acc_unorm: 0.0,
            acc_cross: 0.0,
        })
    }

    pub fn domain(&self) -> &DiscreteDomain {
        self.u.domain()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite()
            && self.v.is_finite()
            && self.acc_dissipation.is_finite()
            && self.acc_unorm.is_finite()
            && self.acc_cross.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Largest accepted relative growth of `M` per step.
    pub adapt_target: f64,
    /// Largest accepted relative change of `u` between predictor and corrector passes.
    pub corrector_tol: f64,
    /// Blow-up is declared once `Q(t)` exceeds this.
    pub blowup_threshold: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// With `false` every step uses `dt0` (convergence studies).
    pub adaptive: bool,
    /// Optional source `g(x[, y], t)`.
    pub source: Option<Expr>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt0: 1e-3,
            dt_min: 1e-14,
            dt_max: 1e-2,
            adapt_target: 0.05,
            corrector_tol: 1e-4,
            blowup_threshold: 1e10,
            t_end: 1.0,
            record_every: 1,
            adaptive: true,
            source: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0 && self.dt_min <= self.dt0 && self.dt0 <= self.dt_max;
        if !ok {
            return Err(Error::Config(format!(
                "need 0 < dt_min <= dt0 <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt0, self.dt_max
            )));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Config("blowup_threshold must be positive".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config("t_end must be positive and finite".into()));
        }
        if !(self.adapt_target > 0.0) || !(self.corrector_tol > 0.0) {
            return Err(Error::Config("adaptation tolerances must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Outcome {
    Completed {
        t_end: f64,
    },
    BlowupDetected {
        t_stop: f64,
        t_extrapolated: f64,
        extrapolation_quality: f64,
    },
    DtUnderflow {
        t_stop: f64,
        q: f64,
    },
    Overflow {
        t_stop: f64,
    },
}

impl Outcome {
    pub fn t_stop(&self) -> f64 {
        match *self {
            Outcome::Completed { t_end } => t_end,
            Outcome::BlowupDetected { t_stop, .. }
            | Outcome::DtUnderflow { t_stop, .. }
            | Outcome::Overflow { t_stop } => t_stop,
        }
    }

    /// Best estimate of the blow-up time, for outcomes that evidence blow-up.
    pub fn blowup_estimate(&self) -> Option<f64> {
        match *self {
            Outcome::BlowupDetected { t_extrapolated, .. } => Some(t_extrapolated),
            Outcome::Overflow { t_stop } => Some(t_stop),
            _ => None,
        }
    }

    pub fn is_blowup(&self) -> bool {
        self.blowup_estimate().is_some()
    }
}

/// When `Q` and `M` each first exceeded the blow-up threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceTimes {
    pub q_cross: Option<f64>,
    pub m_cross: Option<f64>,
    /// Whether both crossed within 1% of each other's time.
    pub within_one_percent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub trace: Trace,
    pub outcome: Outcome,
    pub divergence: DivergenceTimes,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_state: State,
}

fn solve_velocity(domain: &DiscreteDomain, dt: f64, rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
    let c = 1.0 + 0.5 * dt;
    let coupling = 0.5 * dt * c;
    if domain.dimension() == 1 {
        let h = domain.spacing()[0];
        let ih2 = 1.0 / (h * h);
        return solve_tridiagonal_const(c + 2.0 * coupling * ih2, -coupling * ih2, rhs);
    }
    let d = *domain;
    let mut lap = vec![0.0; rhs.len()];
    let lap = std::cell::RefCell::new(&mut lap);
    conjugate_gradient(
        |x, y| {
            let mut l = lap.borrow_mut();
            apply_laplacian(&d, x, &mut l);
            for i in 0..x.len() {
                y[i] = c * x[i] - coupling * l[i];
            }
        },
        rhs,
        Some(guess),
        CG_TOLERANCE,
        10 * rhs.len() + 100,
    )
}

fn full_dot(d: &DiscreteDomain, a: &[f64], b: &[f64]) -> f64 {
    l2_dot(d, a, b) + grad_dot(d, a, b)
}

/// One IMEX step; see [`step_detailed`].
pub fn step(state: &State, dt: f64, nl: &Nonlinearity, source: Option<&Expr>) -> Result<State> {
    step_detailed(state, dt, nl, source).map(|(s, _)| s)
}

/// One IMEX step returning the new state and the relative predictor–corrector
/// gap `max|u⁽²⁾ − u⁽¹⁾| / max|u⁽²⁾|`. Non-finite values are returned, not
/// rejected; the caller classifies them.
pub fn step_detailed(state: &State, dt: f64, nl: &Nonlinearity, source: Option<&Expr>) -> Result<(State, f64)> {
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("time step must be positive, got {dt}")));
    }
    let d = *state.domain();
    let n = d.interior_len();
    let (u, v) = (state.u.values(), state.v.values());
    let half = 0.5 * dt;
    let c = 1.0 + half;

    let mut lap_u = vec![0.0; n];
    let mut lap_v = vec![0.0; n];
    apply_laplacian(&d, u, &mut lap_u);
    apply_laplacian(&d, v, &mut lap_v);
    let base: Vec<f64> = (0..n)
        .map(|i| v[i] + dt * lap_u[i] + half * c * lap_v[i] - half * v[i])
        .collect();
    let forcing = match source {
        Some(g) => Some(sample_at_time(g, &d, state.t + half)?.field.into_values()),
        None => None,
    };

    let solve_pass = |u_end: &[f64], guess: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut explicit = nl.f(0.5 * (u[i] + u_end[i]));
                if let Some(g) = &forcing {
                    explicit += g[i];
                }
                base[i] + dt * explicit
            })
            .collect();
        let w = solve_velocity(&d, dt, &rhs, guess)?;
        let u_new: Vec<f64> = (0..n).map(|i| u[i] + half * (v[i] + w[i])).collect();
        Ok((u_new, w))
    };

    let predictor: Vec<f64> = (0..n).map(|i| u[i] + dt * v[i]).collect();
    let (u_first, w_first) = solve_pass(&predictor, v)?;
    let (u_new, v_new) = solve_pass(&u_first, &w_first)?;

    let scale = u_new.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = u_new
        .iter()
        .zip(&u_first)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let gap = if diff == 0.0 { 0.0 } else { diff / scale.max(f64::MIN_POSITIVE) };

    let acc_dissipation = state.acc_dissipation + half * (full_dot(&d, v, v) + full_dot(&d, &v_new, &v_new));
    let acc_unorm = state.acc_unorm + half * (full_dot(&d, u, u) + full_dot(&d, &u_new, &u_new));
    let acc_cross = state.acc_cross + half * (full_dot(&d, u, v) + full_dot(&d, &u_new, &v_new));

    Ok((
        State {
            u: Field::from_raw(d, u_new),
            v: Field::from_raw(d, v_new),
            t: state.t + dt,
            acc_dissipation,
            acc_unorm,
            acc_cross,
        },
        gap,
    ))
}

fn m_value(s: &State) -> f64 {
    let d = s.domain();
    l2_dot(d, s.v.values(), s.v.values()) + grad_dot(d, s.u.values(), s.u.values())
}

fn q_value(s: &State) -> f64 {
    s.acc_unorm + l2_dot(s.domain(), s.u.values(), s.u.values())
}

/// Integrates from `(u0, v0)` until `t_end`, blow-up, step underflow or overflow.
pub fn run(config: &SolverConfig, u0: Field, v0: Field, nl: &Nonlinearity) -> Result<RunResult> {
    run_observed(config, u0, v0, nl, |_| {})
}

/// Like [`run`], calling `observer` after every accepted step.
pub fn run_observed<O: FnMut(&State)>(
    config: &SolverConfig,
    u0: Field,
    v0: Field,
    nl: &Nonlinearity,
    mut observer: O,
) -> Result<RunResult> {
    config.validate()?;
    let mut state = State::initial(u0, v0)?;
    if !state.is_finite() {
        return Err(Error::Usage("initial data must be finite".into()));
    }
    if let Some(g) = &config.source {
        let allowed: &[Var] = if state.domain().dimension() == 1 {
            &[Var::X, Var::T]
        } else {
            &[Var::X, Var::Y, Var::T]
        };
        g.check_variables(allowed)?;
    }
    let source = config.source.as_ref();
    let first = FunctionalRow::evaluate(&state, nl, None, 0.0)?;
    let e0 = first.energy;
    let mut rows = vec![first];
    let mut divergence = DivergenceTimes {
        q_cross: None,
        m_cross: None,
        within_one_percent: None,
    };
    let mut dt = config.dt0;
    let mut m_old = m_value(&state);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let t_tol = 1e-12 * config.t_end;

    let outcome = loop {
        if state.t >= config.t_end - t_tol {
            break Outcome::Completed { t_end: state.t };
        }
        let dt_try = dt.min(config.t_end - state.t);
        let (candidate, gap) = step_detailed(&state, dt_try, nl, source)?;

        if !candidate.is_finite() {
            if config.adaptive && 0.5 * dt_try >= config.dt_min {
                rejected += 1;
                dt = 0.5 * dt_try;
                continue;
            }
            break Outcome::Overflow { t_stop: state.t };
        }

        let m_new = m_value(&candidate);
        let growth = if m_old > 0.0 { (m_new - m_old) / m_old } else { 0.0 };
        if !m_new.is_finite() {
            break Outcome::Overflow { t_stop: state.t };
        }
        if config.adaptive && (growth > config.adapt_target || gap > config.corrector_tol) {
            rejected += 1;
            let halved = 0.5 * dt_try;
            if halved < config.dt_min {
                break Outcome::DtUnderflow {
                    t_stop: state.t,
                    q: q_value(&state),
                };
            }
            dt = halved;
            continue;
        }

        state = candidate;
        m_old = m_new;
        accepted += 1;
        observer(&state);

        let q = q_value(&state);
        if divergence.m_cross.is_none() && m_new > config.blowup_threshold {
            divergence.m_cross = Some(state.t);
        }
        let blowup = q > config.blowup_threshold;
        let done = state.t >= config.t_end - t_tol;
        if blowup || done || accepted % config.record_every == 0 {
            match FunctionalRow::evaluate(&state, nl, Some(e0), dt_try) {
                Ok(row) => rows.push(row),
                Err(_) => break Outcome::Overflow { t_stop: state.t },
            }
        }
        if blowup {
            divergence.q_cross = Some(state.t);
            break Outcome::BlowupDetected {
                t_stop: state.t,
                t_extrapolated: state.t,
                extrapolation_quality: 0.0,
            };
        }

        if config.adaptive && growth < 0.5 * config.adapt_target && gap < 0.5 * config.corrector_tol {
            dt = (dt_try * 1.2).min(config.dt_max);
        } else if config.adaptive {
            dt = dt_try;
        } else {
            dt = config.dt0;
        }
    };

    if let (Some(q), Some(m)) = (divergence.q_cross, divergence.m_cross) {
        divergence.within_one_percent = Some((q - m).abs() <= 0.01 * q.min(m));
    }

    // A stop mid-record-interval still leaves the last state in the trace.
    if rows.last().map(|r| r.t) != Some(state.t) {
        if let Ok(row) = FunctionalRow::evaluate(&state, nl, Some(e0), dt) {
            rows.push(row);
        }
    }

    let mut trace = Trace {
        rows,
        exponent: nl.p(),
        ended_in_blowup: matches!(outcome, Outcome::BlowupDetected { .. } | Outcome::Overflow { .. }),
    };
    let outcome = match outcome {
        Outcome::BlowupDetected { t_stop, .. } => {
            let (t_extrapolated, extrapolation_quality) = match extrapolate_tmax(&trace) {
                Ok(ex) => (ex.t_est, ex.quality),
                Err(_) => (t_stop, 0.0),
            };
            Outcome::BlowupDetected {
                t_stop,
                t_extrapolated,
                extrapolation_quality,
            }
        }
        other => other,
    };
    trace.ended_in_blowup = outcome.is_blowup();

    Ok(RunResult {
        trace,
        outcome,
        divergence,
        accepted_steps: accepted,
        rejected_steps: rejected,
        final_state: state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub t_est: f64,
    /// Coefficient of determination of the tail fit.
    pub quality: f64,
    /// `false` when the fit was rejected and `t_est` fell back to the stop time.
    pub from_fit: bool,
    pub rows_used: usize,
}

/// Minimum fit quality for accepting the extrapolated root.
pub const EXTRAPOLATION_MIN_QUALITY: f64 = 0.9;
const TAIL_MIN: usize = 8;
const TAIL_MAX: usize = 32;

/// Estimates the blow-up time from the recorded tail, assuming
/// `sup|u| ~ (T − t)^(−1/(p−2))` so that `sup|u|^(−(p−2))` is linear in `t`.
///
/// Uses the last 8–32 rows whose `sup|u|` exceeds ten times its initial
/// value. The root of the least-squares line is the estimate; if the fit
/// quality is below 0.9 (or the line does not decrease) the stop time is
/// returned instead. The estimate never precedes the stop time.
pub fn extrapolate_tmax(trace: &Trace) -> Result<Extrapolation> {
    if !trace.ended_in_blowup {
        return Err(Error::Estimation("trace did not end in blow-up".into()));
    }
    let first = trace
        .rows
        .first()
        .ok_or_else(|| Error::Estimation("empty trace".into()))?;
    let t_stop = trace.rows.last().map(|r| r.t).unwrap_or(0.0);
    let floor = 10.0 * first.sup_abs_u;
    let tail: Vec<&FunctionalRow> = trace
        .rows
        .iter()
        .filter(|r| r.sup_abs_u > floor && r.sup_abs_u.is_finite())
        .collect();
    if tail.len() < TAIL_MIN {
        return Err(Error::Estimation(format!(
            "need at least {TAIL_MIN} rows with sup|u| > {floor:e}, found {}",
            tail.len()
        )));
    }
    let tail = &tail[tail.len().saturating_sub(TAIL_MAX)..];
    let k = trace.exponent - 2.0;
    let t_ref = t_stop;
    let xs: Vec<f64> = tail.iter().map(|r| r.t - t_ref).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.sup_abs_u.powf(-k)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let quality = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 0.0 };
    let root = t_ref - intercept / slope;
    let usable = slope < 0.0 && root.is_finite() && quality >= EXTRAPOLATION_MIN_QUALITY;
    Ok(Extrapolation {
        t_est: if usable { root.max(t_stop) } else { t_stop },
        quality: if quality.is_finite() { quality } else { 0.0 },
        from_fit: usable,
        rows_used: tail.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::power;
    use std::f64::consts::PI;

    fn interval(n: usize) -> DiscreteDomain {
        DiscreteDomain::interval(1.0, n).unwrap()
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let d = interval(32);
        let nl = power(4.0).unwrap();
        let s = State::initial(Field::zeros(d), Field::zeros(d)).unwrap();
        let next = step(&s, 0.1, &nl, None).unwrap();
        assert!(next.u.values().iter().chain(next.v.values()).all(|&x| x == 0.0));
        assert_eq!(next.acc_unorm, 0.0);
    }

    #[test]
    fn rejects_non_positive_step() {
        let d = interval(8);
        let nl = power(4.0).unwrap();
        let s = State::initial(Field::zeros(d), Field::zeros(d)).unwrap();
        assert!(step(&s, 0.0, &nl, None).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.dt_min = 1.0;
        assert!(c.validate().is_err());
        let c = SolverConfig { blowup_threshold: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn synthetic_exact_tail_extrapolates_to_one() {
        // sup|u| = (1 − t)^(−1/2) for p = 4
        let d = interval(8);
        let nl = power(4.0).unwrap();
        let base = FunctionalRow::evaluate(
            &State::initial(Field::zeros(d), Field::zeros(d)).unwrap(),
            &nl,
            None,
            0.0,
        )
        .unwrap();
        let mut rows = vec![FunctionalRow { sup_abs_u: 1.0, ..base }];
        for k in 0..40 {
            let t = 1.0 - 0.01 * 0.8f64.powi(k);
            rows.push(FunctionalRow { t, sup_abs_u: (1.0 - t).powf(-0.5), ..base });
        }
        let trace = Trace { rows, exponent: 4.0, ended_in_blowup: true };
        let ex = extrapolate_tmax(&trace).unwrap();
        assert!((ex.t_est - 1.0).abs() < 1e-6, "{ex:?}");
        assert!(ex.quality > 0.999999);
        assert_eq!(ex.rows_used, 32);
    }

    #[test]
    fn extrapolation_needs_blowup_and_tail() {
        let trace = Trace { rows: vec![], exponent: 4.0, ended_in_blowup: false };
        assert!(matches!(extrapolate_tmax(&trace), Err(Error::Estimation(_))));
    }

    #[test]
    fn linear_mode_decays_like_closed_form() {
        // f ≡ 0 via p-power with tiny data is not linear; use zero source and
        // a custom-free check: u0 = ε sin(πx) keeps f(u) ~ ε³ negligible.
        let d = interval(64);
        let nl = power(4.0).unwrap();
        let eps = 1e-6;
        let u0 = Field::from_fn(d, |x, _| eps * (PI * x).sin()).unwrap();
        let cfg = SolverConfig {
            dt0: 1e-3,
            dt_max: 1e-3,
            t_end: 0.5,
            adaptive: false,
            ..Default::default()
        };
        let res = run(&cfg, u0, Field::zeros(d), &nl).unwrap();
        assert!(matches!(res.outcome, Outcome::Completed { .. }));
        // T(t) = (π² e^{−t} − e^{−π² t}) / (π² − 1) for T(0)=1, T′(0)=0.
        let pi2 = PI * PI;
        let t = res.final_state.t;
        let amp = (pi2 * (-t).exp() - (-pi2 * t).exp()) / (pi2 - 1.0);
        let mid = res.final_state.u.values()[31] / eps;
        assert!((mid - amp).abs() < 1e-3, "{mid} vs {amp}");
    }
}
