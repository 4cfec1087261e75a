use std::path::Path;

use anyhow::{Context, Result};
use dampwave_core::bounds::{bounds_report, BoundsReport};
use dampwave_core::functionals::{concavity_check, k_monotonicity, ConcavityReport, MonotonicityReport};
use dampwave_core::integrator::{extrapolate_tmax, run, DivergenceTimes, Extrapolation, Outcome};
use dampwave_core::mms::{convergence_study, StudyResult};
use dampwave_core::nonlinearity::{check_h1, check_h2, check_h3, CheckReport, HypothesisParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{initial_fields, ExperimentConfig};
use crate::output::{format_float, trace_csv, write_json, write_text};

/// Boundary values above this are reported as incompatible with the Dirichlet condition.
const BOUNDARY_WARN: f64 = 1e-12;

pub fn exit_code(outcome: &Outcome) -> i32 {
    match outcome {
        Outcome::Completed { .. } => 0,
        Outcome::BlowupDetected { .. } => 2,
        Outcome::DtUnderflow { .. } => 3,
        Outcome::Overflow { .. } => 4,
    }
}

#[derive(Debug, Serialize)]
struct NonlinearityEcho {
    name: String,
    params: HypothesisParams,
    note: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sandwich {
    pub t_lower: f64,
    pub t_estimate: f64,
    pub t_upper: f64,
    pub holds: bool,
    /// `t_estimate / t_lower − 1`
    pub lower_clearance: f64,
    /// `1 − t_estimate / t_upper`
    pub upper_clearance: f64,
}

#[derive(Debug, Serialize)]
struct ConcavityEcho {
    lambda: f64,
    b: f64,
    eta: f64,
    horizon: f64,
    report: ConcavityReport,
    /// `min_defect / max_scale`
    relative_defect: f64,
}

#[derive(Debug, Serialize)]
struct Diagnostics {
    k_monotonicity: MonotonicityReport,
    nehari_negative_at_every_row: bool,
    max_abs_energy_residual: f64,
    concavity: Option<ConcavityEcho>,
}

#[derive(Debug, Serialize)]
struct Steps {
    accepted: usize,
    rejected: usize,
    recorded: usize,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    outcome: Outcome,
    extrapolation: Option<Extrapolation>,
    divergence: DivergenceTimes,
    steps: Steps,
    sandwich: Option<Sandwich>,
    bounds: Option<BoundsReport>,
    diagnostics: Option<Diagnostics>,
    nonlinearity: NonlinearityEcho,
    u0_boundary_max: f64,
    u1_boundary_max: f64,
    notes: Vec<String>,
    config: &'a ExperimentConfig,
}

/// What a finished run tells the caller.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub t_lower: Option<f64>,
    pub t_upper: Option<f64>,
    pub criterion_high_energy: Option<bool>,
    pub criterion_neg_energy: Option<bool>,
    pub sandwich: Option<Sandwich>,
}

pub fn execute_run(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let domain = config.domain()?;
    let nl = config.nonlinearity()?;
    let solver = config.solver()?;
    let init = initial_fields(config, &domain)?;
    let mut notes = Vec::new();
    for (name, m) in [("u0", init.u0_boundary_max), ("u1", init.u1_boundary_max)] {
        if m > BOUNDARY_WARN {
            notes.push(format!("{name} does not vanish on the boundary (max |{name}| = {m:e}); boundary values are dropped"));
        }
    }

    let bounds = if config.report.bounds {
        Some(bounds_report(&init.u0, &init.v0, &nl, config.seed)?)
    } else {
        None
    };
    let result = run(&solver, init.u0, init.v0, &nl)?;
    let extrapolation = extrapolate_tmax(&result.trace).ok();
    if let Outcome::DtUnderflow { q, .. } = result.outcome {
        notes.push(format!("step size fell below dt_min with Q = {q:e}"));
    }
    if let Some(c) = bounds.as_ref().and_then(|b| b.constants.as_ref()) {
        if !c.certified {
            notes.push("lower bound uses an estimated (not certified) embedding constant".into());
        }
    }

    let t_lower = bounds.as_ref().and_then(|b| b.lower.as_ref()).map(|l| l.t_lower);
    let best = bounds.as_ref().and_then(|b| b.upper).map(|u| u.best);
    let sandwich = match (result.outcome.blowup_estimate(), t_lower, best) {
        (Some(t), Some(lo), Some(up)) => Some(Sandwich {
            t_lower: lo,
            t_estimate: t,
            t_upper: up.t_upper,
            holds: lo <= t && t <= up.t_upper,
            lower_clearance: t / lo - 1.0,
            upper_clearance: 1.0 - t / up.t_upper,
        }),
        _ => None,
    };

    let diagnostics = if config.report.diagnostics {
        let concavity = match (result.outcome.is_blowup(), best) {
            (true, Some(b)) => {
                let horizon = result.outcome.t_stop();
                let report = concavity_check(&result.trace, b.lambda, b.b, b.eta, horizon)?;
                Some(ConcavityEcho {
                    lambda: b.lambda,
                    b: b.b,
                    eta: b.eta,
                    horizon,
                    relative_defect: report.min_defect / report.max_scale,
                    report,
                })
            }
            _ => None,
        };
        Some(Diagnostics {
            k_monotonicity: k_monotonicity(&result.trace, 1e-10),
            nehari_negative_at_every_row: result.trace.rows.iter().all(|r| r.nehari < 0.0),
            max_abs_energy_residual: result
                .trace
                .rows
                .iter()
                .map(|r| r.energy_residual.abs())
                .fold(0.0, f64::max),
            concavity,
        })
    } else {
        None
    };

    write_text(&out.join("trace.csv"), &trace_csv(&result.trace))?;
    let summary = RunSummary {
        outcome: result.outcome,
        t_lower,
        t_upper: best.map(|b| b.t_upper),
        criterion_high_energy: bounds.as_ref().map(|b| b.criterion_high_energy.holds),
        criterion_neg_energy: bounds.as_ref().map(|b| b.criterion_neg_energy.holds),
        sandwich,
    };
    let report = RunReport {
        outcome: result.outcome,
        extrapolation,
        divergence: result.divergence,
        steps: Steps {
            accepted: result.accepted_steps,
            rejected: result.rejected_steps,
            recorded: result.trace.rows.len(),
        },
        sandwich,
        bounds,
        diagnostics,
        nonlinearity: NonlinearityEcho {
            name: nl.name.clone(),
            params: nl.params,
            note: nl.note.clone(),
        },
        u0_boundary_max: init.u0_boundary_max,
        u1_boundary_max: init.u1_boundary_max,
        notes,
        config,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct BoundsDocument<'a> {
    bounds: BoundsReport,
    u0_boundary_max: f64,
    u1_boundary_max: f64,
    config: &'a ExperimentConfig,
}

pub fn execute_bounds(config: &ExperimentConfig, out: &Path) -> Result<BoundsReport> {
    let domain = config.domain()?;
    let nl = config.nonlinearity()?;
    let init = initial_fields(config, &domain)?;
    let bounds = bounds_report(&init.u0, &init.v0, &nl, config.seed)?;
    let doc = BoundsDocument {
        bounds: bounds.clone(),
        u0_boundary_max: init.u0_boundary_max,
        u1_boundary_max: init.u1_boundary_max,
        config,
    };
    write_json(&out.join("bounds.json"), &doc)?;
    Ok(bounds)
}

#[derive(Debug, Serialize)]
pub struct CheckDocument {
    pub nonlinearity: String,
    pub s_max: f64,
    pub samples: usize,
    pub passed: bool,
    pub reports: Vec<CheckReport>,
}

pub fn execute_check(config: &ExperimentConfig, out: &Path) -> Result<CheckDocument> {
    let nl = config.nonlinearity()?;
    let (s_max, n) = (config.report.check_s_max, config.report.check_samples);
    let reports = vec![check_h1(&nl, s_max, n)?, check_h2(&nl, s_max, n)?, check_h3(&nl, s_max, n)?];
    let doc = CheckDocument {
        nonlinearity: nl.name.clone(),
        s_max,
        samples: n,
        passed: reports.iter().all(|r| r.passed),
        reports,
    };
    write_json(&out.join("check.json"), &doc)?;
    Ok(doc)
}

pub fn execute_convergence(config: &ExperimentConfig, out: &Path) -> Result<StudyResult> {
    let nl = config.nonlinearity()?;
    let (mms, plan) = config.mms()?;
    let study = convergence_study(&mms, &nl, &plan)?;
    let mut csv = String::from("cells,dt,error,order\n");
    for (k, level) in study.levels.iter().enumerate() {
        let order = if k == 0 { String::new() } else { format_float(study.orders[k - 1]) };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            level.cells,
            format_float(level.dt),
            format_float(level.error),
            order
        ));
    }
    write_text(&out.join("convergence.csv"), &csv)?;
    write_json(&out.join("convergence.json"), &study)?;
    Ok(study)
}

/// Every combination of the grid values, in key order with the last key varying fastest.
fn grid_points(grid: &std::collections::BTreeMap<String, Vec<f64>>) -> Vec<Vec<(String, f64)>> {
    let mut points = vec![Vec::new()];
    for (name, values) in grid {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for &v in values {
                let mut q = p.clone();
                q.push((name.clone(), v));
                next.push(q);
            }
        }
        points = next;
    }
    points
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

fn outcome_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Completed { .. } => "completed",
        Outcome::BlowupDetected { .. } => "blowup_detected",
        Outcome::DtUnderflow { .. } => "dt_underflow",
        Outcome::Overflow { .. } => "overflow",
    }
}

pub fn execute_sweep(config: &ExperimentConfig, out: &Path) -> Result<usize> {
    let sweep = config.sweep.as_ref().context("the sweep command needs a [sweep] table")?;
    let points = grid_points(&sweep.grid);
    let results: Vec<Result<RunSummary>> = points
        .par_iter()
        .enumerate()
        .map(|(k, assignment)| {
            let mut c = config.clone();
            c.sweep = None;
            for (name, v) in assignment {
                c.constants.insert(name.clone(), *v);
            }
            execute_run(&c, &out.join(format!("point_{k:04}")))
        })
        .collect();

    let names: Vec<&String> = sweep.grid.keys().collect();
    let mut csv = String::from("index");
    for n in &names {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push_str(",outcome,t_stop,t_estimate,t_lower,t_upper,criterion_high_energy,criterion_neg_energy,sandwich,error\n");
    let mut failures = 0;
    for (k, (assignment, result)) in points.iter().zip(&results).enumerate() {
        let mut row = k.to_string();
        for (_, v) in assignment {
            row.push(',');
            row.push_str(&format_float(*v));
        }
        match result {
            Ok(s) => row.push_str(&format!(
                ",{},{},{},{},{},{},{},{},",
                outcome_name(&s.outcome),
                format_float(s.outcome.t_stop()),
                opt(s.outcome.blowup_estimate()),
                opt(s.t_lower),
                opt(s.t_upper),
                opt_bool(s.criterion_high_energy),
                opt_bool(s.criterion_neg_energy),
                opt_bool(s.sandwich.map(|w| w.holds)),
            )),
            Err(e) => {
                failures += 1;
                let msg = format!("{e:#}").replace(['"', '\n'], "'");
                row.push_str(&format!(",error,,,,,,,,\"{msg}\""));
            }
        }
        csv.push_str(&row);
        csv.push('\n');
    }
    write_text(&out.join("sweep.csv"), &csv)?;
    Ok(failures)
}
