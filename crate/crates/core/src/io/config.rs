//! Run configuration files.
//!
//! A configuration is a TOML document with one table per section:
//!
//! ```toml
//! id = "bean-sine"
//!
//! [curve]
//! kind = "bean"
//!
//! [solver]
//! n = 512
//! t_end = 3.0
//!
//! [initial]
//! kind = "sine"
//! amplitude = 0.3
//! mode = 2
//! relative = true
//!
//! [forcing]
//! C = "auto"
//!
//! [outputs]
//! formats = ["csv", "json"]
//!
//! [checks]
//! enabled = ["barrier", "gradient"]
//! ```
//!
//! Every section except `curve` and `initial` may be omitted.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{BARRIER_TOL, GRADIENT_SLACK, SECOND_DERIVATIVE_SLACK};
use crate::chart::{admissible_interval, AdmissibleChart};
use crate::curve::{build_target, CurveSpec};
use crate::error::{Error, Result};
use crate::flow::{auto_literal, SolverConfig, TimeStep, DEFAULT_TOL_STOP};
use crate::io::expr::{Bindings, Expr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub curve: CurveSpec,
    #[serde(default)]
    pub solver: SolverSection,
    pub initial: InitialData,
    #[serde(default)]
    pub forcing: ForcingSection,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(default)]
    pub checks: CheckSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub n: usize,
    pub dt: TimeStep,
    pub t_end: f64,
    pub snapshot_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    /// Early stop once `sup |r|` falls below this value; 0 disables it.
    pub tol_stop: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            n: 512,
            dt: TimeStep::Auto,
            t_end: 3.0,
            snapshot_every: 10,
            record_every: None,
            tol_stop: DEFAULT_TOL_STOP,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            snapshot_every: self.snapshot_every,
            record_every: self.record_every,
            tol_stop: (self.tol_stop > 0.0).then_some(self.tol_stop),
        }
    }
}

/// Initial graph function over the target's arclength `u in [0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialData {
    Constant {
        value: f64,
    },
    /// `offset + amplitude sin(2 pi mode u / L)`; with `relative` both
    /// `offset` and `amplitude` are multiples of the chart end `r_hi`.
    Sine {
        amplitude: f64,
        mode: u32,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        relative: bool,
    },
    Expression {
        expr: String,
    },
}

impl InitialData {
    /// Nodal values on the chart's grid, checked against the admissible interval.
    pub fn sample(&self, chart: &AdmissibleChart) -> Result<Vec<f64>> {
        let curve = chart.curve();
        let length = curve.length();
        let u = curve.u();
        let r: Vec<f64> = match self {
            InitialData::Constant { value } => vec![*value; u.len()],
            InitialData::Sine {
                amplitude,
                mode,
                offset,
                relative,
            } => {
                let scale = if *relative { chart.r_hi() } else { 1.0 };
                u.iter()
                    .map(|&s| {
                        scale * (offset + amplitude * (TAU * *mode as f64 * s / length).sin())
                    })
                    .collect()
            }
            InitialData::Expression { expr } => {
                let e = Expr::parse(expr)?;
                let b = Bindings {
                    length,
                    r_hi: chart.r_hi(),
                    r_lo: chart.r_lo(),
                };
                u.iter().map(|&s| e.eval(s, &b)).collect()
            }
        };
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !chart.admits(**v)) {
            return Err(Error::Validation {
                field: "initial".into(),
                message: format!(
                    "r0 = {v} at node {i} (u = {}) is outside the admissible interval ({}, {})",
                    u[i],
                    chart.r_lo(),
                    chart.r_hi()
                ),
            });
        }
        Ok(r)
    }
}

/// `"auto"` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Strength {
    Fixed(f64),
    #[serde(with = "auto_literal")]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingSection {
    #[serde(rename = "C")]
    pub c: Strength,
}

impl Default for ForcingSection {
    fn default() -> Self {
        Self { c: Strength::Auto }
    }
}

impl ForcingSection {
    pub fn override_c(&self) -> Option<f64> {
        match self.c {
            Strength::Fixed(c) => Some(c),
            Strength::Auto => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    SvgField,
    SvgEvolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub formats: BTreeSet<OutputFormat>,
    pub out_dir: PathBuf,
    pub arrow_scale: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            formats: BTreeSet::new(),
            out_dir: PathBuf::from("out"),
            arrow_scale: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Barrier,
    Gradient,
    SecondDerivative,
    HigherDerivatives,
    /// Hausdorff distance between the graph solution and the ambient polygon.
    Oracle,
    /// Round trip `project(to_ambient(u, r))` on a lattice of the chart.
    ChartRoundtrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub enabled: BTreeSet<CheckName>,
    pub barrier_tol: f64,
    pub gradient_slack: f64,
    pub second_derivative_slack: f64,
    /// Forward-Euler step of the ambient polygon.
    pub oracle_dt: f64,
    pub oracle_tol: f64,
    pub roundtrip_tol: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            enabled: BTreeSet::new(),
            barrier_tol: BARRIER_TOL,
            gradient_slack: GRADIENT_SLACK,
            second_derivative_slack: SECOND_DERIVATIVE_SLACK,
            oracle_dt: 1e-5,
            oracle_tol: 5e-3,
            roundtrip_tol: 1e-8,
        }
    }
}

/// Target, chart and initial data built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub chart: AdmissibleChart,
    pub r0: Vec<f64>,
}

impl RunConfig {
    /// Check field ranges that do not need the target curve.
    pub fn validate_fields(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Validation {
                field: field.into(),
                message,
            })
        };
        self.curve.validate()?;
        let s = &self.solver;
        if !(s.t_end.is_finite() && s.t_end > 0.0) {
            return bad("solver.t_end", format!("must be positive, got {}", s.t_end));
        }
        if let TimeStep::Fixed(dt) = s.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(
                    "solver.dt",
                    format!("must be positive or \"auto\", got {dt}"),
                );
            }
        }
        if s.snapshot_every == 0 || s.record_every == Some(0) {
            return bad(
                "solver",
                "snapshot_every and record_every must be at least 1".into(),
            );
        }
        if !(s.tol_stop >= 0.0) {
            return bad(
                "solver.tol_stop",
                format!("must be non-negative, got {}", s.tol_stop),
            );
        }
        if let Strength::Fixed(c) = self.forcing.c {
            if !(c.is_finite() && c > 0.0) {
                return bad(
                    "forcing.C",
                    format!("must be positive or \"auto\", got {c}"),
                );
            }
        }
        if !(self.outputs.arrow_scale.is_finite() && self.outputs.arrow_scale > 0.0) {
            return bad(
                "outputs.arrow_scale",
                format!("must be positive, got {}", self.outputs.arrow_scale),
            );
        }
        let c = &self.checks;
        for (name, v) in [
            ("checks.barrier_tol", c.barrier_tol),
            ("checks.gradient_slack", c.gradient_slack),
            ("checks.second_derivative_slack", c.second_derivative_slack),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, format!("must be non-negative, got {v}"));
            }
        }
        for (name, v) in [
            ("checks.oracle_dt", c.oracle_dt),
            ("checks.oracle_tol", c.oracle_tol),
            ("checks.roundtrip_tol", c.roundtrip_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Build the target curve and chart and sample the initial data.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate_fields()?;
        let curve = Arc::new(build_target(&self.curve, self.solver.n)?);
        let chart = admissible_interval(curve)?;
        let r0 = self.initial.sample(&chart)?;
        Ok(Prepared { chart, r0 })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations always serialize")
    }
}

/// Parse and fully validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg = parse_unchecked(text)?;
    cfg.prepare()?;
    Ok(cfg)
}

/// Parse without building the target; only syntax and field types are checked.
pub fn parse_unchecked(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            message: e.message().to_string(),
        }
    })
}
