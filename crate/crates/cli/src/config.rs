//! Experiment configuration files (TOML) and their translation into solver inputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dampwave_core::expr::{parse_with, sample, Expr};
use dampwave_core::integrator::SolverConfig;
use dampwave_core::mesh::build_domain;
use dampwave_core::mms::{ManufacturedSolution, StudyPlan};
use dampwave_core::nonlinearity::{custom, logpower, power, HypothesisParams, Nonlinearity};
use dampwave_core::{DiscreteDomain, Field};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSpec,
    pub problem: ProblemSpec,
    /// Named scalars usable inside every expression.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub report: ReportSpec,
    pub convergence: Option<ConvergenceSpec>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dimension: usize,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// `"power:<p>"`, `"logpower:<p>"` or `"custom"`.
    pub nonlinearity: String,
    #[serde(default = "zero_expr")]
    pub u0: String,
    #[serde(default = "zero_expr")]
    pub u1: String,
    pub source: Option<String>,
    pub custom: Option<CustomSpec>,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    pub f: String,
    pub primitive: String,
    pub derivative: Option<String>,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub k0: f64,
    pub k1: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub adapt_target: f64,
    pub corrector_tol: f64,
    pub blowup_threshold: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub adaptive: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSpec {
            dt0: d.dt0,
            dt_min: d.dt_min,
            dt_max: d.dt_max,
            adapt_target: d.adapt_target,
            corrector_tol: d.corrector_tol,
            blowup_threshold: d.blowup_threshold,
            t_end: d.t_end,
            record_every: d.record_every,
            adaptive: d.adaptive,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSpec {
    pub bounds: bool,
    pub diagnostics: bool,
    pub check_s_max: f64,
    pub check_samples: usize,
}

impl Default for ReportSpec {
    fn default() -> Self {
        ReportSpec {
            bounds: true,
            diagnostics: true,
            check_s_max: 100.0,
            check_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub exact: String,
    pub exact_t: String,
    pub source: String,
    pub base_cells: usize,
    pub base_dt: f64,
    pub t_end: f64,
    #[serde(default = "three")]
    pub levels: usize,
    #[serde(default = "yes")]
    pub refine_space: bool,
}

fn three() -> usize {
    3
}

fn yes() -> bool {
    true
}

/// Cartesian grid over named constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub grid: BTreeMap<String, Vec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn domain(&self) -> Result<DiscreteDomain> {
        let d = &self.domain;
        Ok(build_domain(d.dimension, &d.lengths, &d.cells)?)
    }

    pub fn expr(&self, text: &str) -> Result<Expr> {
        parse_with(text, &self.constants).with_context(|| format!("in expression {text:?}"))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let spec = self.problem.nonlinearity.trim();
        if spec == "custom" {
            let Some(c) = &self.problem.custom else {
                bail!("nonlinearity \"custom\" needs a [problem.custom] table");
            };
            let params = HypothesisParams {
                p: c.p,
                alpha: c.alpha,
                beta: c.beta,
                q: c.q,
                k0: c.k0,
                k1: c.k1,
                l1: c.l1,
            };
            let derivative = c.derivative.as_deref().map(|d| self.expr(d)).transpose()?;
            return Ok(custom(self.expr(&c.f)?, self.expr(&c.primitive)?, derivative, params)?);
        }
        let (family, p) = spec
            .split_once(':')
            .with_context(|| format!("unknown nonlinearity {spec:?}; expected power:<p>, logpower:<p> or custom"))?;
        let p: f64 = p.trim().parse().with_context(|| format!("bad exponent in {spec:?}"))?;
        match family.trim() {
            "power" => Ok(power(p)?),
            "logpower" => Ok(logpower(p)?),
            other => bail!("unknown nonlinearity family {other:?}"),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let source = self.problem.source.as_deref().map(|t| self.expr(t)).transpose()?;
        let config = SolverConfig {
            dt0: s.dt0,
            dt_min: s.dt_min,
            dt_max: s.dt_max,
            adapt_target: s.adapt_target,
            corrector_tol: s.corrector_tol,
            blowup_threshold: s.blowup_threshold,
            t_end: s.t_end,
            record_every: s.record_every,
            adaptive: s.adaptive,
            source,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn mms(&self) -> Result<(ManufacturedSolution, StudyPlan)> {
        let Some(c) = &self.convergence else {
            bail!("the convergence command needs a [convergence] table");
        };
        let mms = ManufacturedSolution {
            exact: self.expr(&c.exact)?,
            exact_t: self.expr(&c.exact_t)?,
            source: self.expr(&c.source)?,
        };
        let plan = StudyPlan {
            dimension: self.domain.dimension,
            lengths: self.domain.lengths.clone(),
            base_cells: c.base_cells,
            base_dt: c.base_dt,
            t_end: c.t_end,
            levels: c.levels,
            refine_space: c.refine_space,
        };
        Ok((mms, plan))
    }
}

/// Initial data sampled on the grid, with boundary-compatibility metrics.
pub struct InitialFields {
    pub u0: Field,
    pub v0: Field,
    pub u0_boundary_max: f64,
    pub u1_boundary_max: f64,
}

pub fn initial_fields(config: &ExperimentConfig, domain: &DiscreteDomain) -> Result<InitialFields> {
    let u0 = sample(&config.expr(&config.problem.u0)?, domain).context("sampling u0")?;
    let u1 = sample(&config.expr(&config.problem.u1)?, domain).context("sampling u1")?;
    Ok(InitialFields {
        u0: u0.field,
        v0: u1.field,
        u0_boundary_max: u0.boundary_max,
        u1_boundary_max: u1.boundary_max,
    })
}
