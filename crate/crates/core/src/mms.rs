//! Manufactured-solution convergence studies: run the solver with a source
//! that makes a chosen `u*` exact, refine `dt` and `h` together, and report
//! the observed orders.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{sample_at_time, Expr, Var};
use crate::integrator::{run_observed, SolverConfig};
use crate::mesh::{build_domain, l2_dot, DiscreteDomain};
use crate::nonlinearity::Nonlinearity;

#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    /// `u*(x[, y], t)`
    pub exact: Expr,
    /// `∂ₜu*`, used for the initial velocity.
    pub exact_t: Expr,
    /// `u*_tt − Δu* − Δu*_t + u*_t − f(u*)`
    pub source: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyPlan {
    pub dimension: usize,
    pub lengths: Vec<f64>,
    /// Cells per axis on the coarsest level.
    pub base_cells: usize,
    pub base_dt: f64,
    pub t_end: f64,
    pub levels: usize,
    /// Halve `h` along with `dt`; with `false` only `dt` is refined.
    pub refine_space: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelResult {
    pub cells: usize,
    pub dt: f64,
    /// `max_t ‖u_h(t) − u*(t)‖₂`
    pub error: f64,
    /// `max_t |E(t) + ∫‖u_τ‖² − E(0)|` (meaningful only without a source).
    pub max_energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub levels: Vec<LevelResult>,
    /// `log₂(e_k / e_{k+1})` between consecutive levels.
    pub orders: Vec<f64>,
    /// `e_k / e_{k+1}` between consecutive levels.
    pub ratios: Vec<f64>,
}

fn level_domain(plan: &StudyPlan, cells: usize) -> Result<DiscreteDomain> {
    build_domain(plan.dimension, &plan.lengths, &vec![cells; plan.dimension])
}

/// Runs one level with fixed `dt` and returns its maximum L² error.
pub fn run_level(
    mms: &ManufacturedSolution,
    nl: &Nonlinearity,
    domain: DiscreteDomain,
    dt: f64,
    t_end: f64,
) -> Result<LevelResult> {
    let vars: &[Var] = if domain.dimension() == 1 {
        &[Var::X, Var::T]
    } else {
        &[Var::X, Var::Y, Var::T]
    };
    for e in [&mms.exact, &mms.exact_t, &mms.source] {
        e.check_variables(vars)?;
    }
    let u0 = sample_at_time(&mms.exact, &domain, 0.0)?.field;
    let v0 = sample_at_time(&mms.exact_t, &domain, 0.0)?.field;
    let config = SolverConfig {
        dt0: dt,
        dt_min: dt,
        dt_max: dt,
        t_end,
        adaptive: false,
        blowup_threshold: f64::MAX,
        source: Some(mms.source.clone()),
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut failure = None;
    let result = run_observed(&config, u0, v0, nl, |state| {
        if failure.is_some() {
            return;
        }
        match sample_at_time(&mms.exact, &domain, state.t) {
            Ok(s) => {
                let diff: Vec<f64> = state
                    .u
                    .values()
                    .iter()
                    .zip(s.field.values())
                    .map(|(a, b)| a - b)
                    .collect();
                worst = worst.max(l2_dot(&domain, &diff, &diff).sqrt());
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if !matches!(result.outcome, crate::integrator::Outcome::Completed { .. }) {
        return Err(Error::Numerical(format!(
            "manufactured-solution run did not complete: {:?}",
            result.outcome
        )));
    }
    let max_energy_residual = result
        .trace
        .rows
        .iter()
        .map(|r| r.energy_residual.abs())
        .fold(0.0, f64::max);
    Ok(LevelResult {
        cells: domain.cells()[0],
        dt,
        error: worst,
        max_energy_residual,
    })
}

pub fn convergence_study(mms: &ManufacturedSolution, nl: &Nonlinearity, plan: &StudyPlan) -> Result<StudyResult> {
    if plan.levels < 2 {
        return Err(Error::Config("a convergence study needs at least two levels".into()));
    }
    if !(plan.base_dt > 0.0 && plan.t_end > 0.0) {
        return Err(Error::Config("base_dt and t_end must be positive".into()));
    }
    let mut levels = Vec::with_capacity(plan.levels);
    for k in 0..plan.levels {
        let cells = if plan.refine_space {
            plan.base_cells << k
        } else {
            plan.base_cells
        };
        let dt = plan.base_dt / (1u64 << k) as f64;
        levels.push(run_level(mms, nl, level_domain(plan, cells)?, dt, plan.t_end)?);
    }
    let ratios: Vec<f64> = levels.windows(2).map(|w| w[0].error / w[1].error).collect();
    let orders = ratios.iter().map(|r| r.log2()).collect();
    Ok(StudyResult { levels, orders, ratios })
}
