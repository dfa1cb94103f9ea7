//! Batch driver: run configured simulations, evaluate the requested checks,
//! write outputs and assemble the JSON report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::ambient::{ambient_run, hausdorff, AmbientPolygon};
use crate::analysis::{
    barrier_check, gradient_envelope_check, higher_derivative_decay,
    second_derivative_envelope_check, t_epsilon, CheckOutcome, FlowTrace, OrderRate, MAX_ORDER,
    TAIL_OFFSET,
};
use crate::chart::AdmissibleChart;
use crate::error::{Error, Result};
use crate::flow::GraphFlow;
use crate::forcing::{select_c, ForcingConfig};
use crate::io::config::{CheckName, OutputFormat, RunConfig};
use crate::io::emit;

/// Smallest half-width of the barrier bracket around the initial data.
const BRACKET_FLOOR: f64 = 1e-6;
/// Lattice of the chart round-trip check: stations times offsets.
const ROUNDTRIP_LATTICE: (usize, usize) = (64, 9);

/// What a batch does with each configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Run, write the configured outputs and evaluate the configured checks.
    Simulate,
    /// Only write the vector-field figure; no flow is run.
    Field,
    /// Run and evaluate checks; outputs are written as configured.
    Verify,
    /// Like `Verify` with the ambient oracle comparison always enabled.
    Compare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub mode: Mode,
    /// Overrides every run's `outputs.out_dir`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            out_dir: None,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub curve: String,
    pub n: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<ReportMeta>,
    /// `m0..m4`: fitted tail rate, `"converged"`, or null when no fit was possible.
    pub rates: BTreeMap<String, Value>,
    pub checks: Vec<CheckOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    fn failed(id: String, e: &Error) -> Self {
        Self {
            id,
            meta: None,
            rates: BTreeMap::new(),
            checks: Vec::new(),
            error: Some(e.to_string()),
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub runs: Vec<RunReport>,
}

impl BatchReport {
    /// Process exit status: 0 iff every run finished and every check passed.
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().all(RunReport::passed) {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }
}

/// Execute every `(id, config)` pair and collect the report, in input order.
pub fn run_batch(configs: &[(String, RunConfig)], opts: &BatchOptions) -> BatchReport {
    let exec = || {
        configs
            .par_iter()
            .map(|(id, cfg)| execute(id, cfg, opts))
            .collect::<Vec<_>>()
    };
    let runs = match rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
    {
        Ok(pool) => pool.install(exec),
        Err(_) => exec(),
    };
    BatchReport { runs }
}

/// Execute one configuration; errors end up in the report.
pub fn execute(id: &str, cfg: &RunConfig, opts: &BatchOptions) -> RunReport {
    match try_execute(id, cfg, opts) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("run {id}: {e}");
            RunReport::failed(id.to_string(), &e)
        }
    }
}

fn try_execute(id: &str, cfg: &RunConfig, opts: &BatchOptions) -> Result<RunReport> {
    let prepared = cfg.prepare()?;
    let chart = prepared.chart;
    let forcing = select_c(chart.curve(), &chart, cfg.forcing.override_c())?;
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.outputs.out_dir.clone());
    let stem = out_dir.join(id);
    let formats = &cfg.outputs.formats;

    if opts.mode == Mode::Field {
        emit::emit_svg_field(
            &chart,
            &forcing,
            &emit::with_suffix(&stem, ".field.svg"),
            cfg.outputs.arrow_scale,
        )?;
        return Ok(RunReport {
            id: id.to_string(),
            meta: None,
            rates: BTreeMap::new(),
            checks: Vec::new(),
            error: None,
        });
    }
    if formats.contains(&OutputFormat::SvgField) {
        emit::emit_svg_field(
            &chart,
            &forcing,
            &emit::with_suffix(&stem, ".field.svg"),
            cfg.outputs.arrow_scale,
        )?;
    }

    let flow = GraphFlow::new(chart.clone(), forcing);
    let trace = flow.run(&prepared.r0, &cfg.solver.solver_config())?;
    log::info!(
        "run {id}: {} records up to t = {}",
        trace.len(),
        trace.t_end()
    );

    if formats.contains(&OutputFormat::Csv) {
        emit::emit_csv(&trace, &stem)?;
    }
    if formats.contains(&OutputFormat::Json) {
        emit::emit_trace_json(&trace, &stem)?;
    }
    if formats.contains(&OutputFormat::SvgEvolution) {
        emit::emit_svg_evolution(&chart, &trace, &emit::with_suffix(&stem, ".evolution.svg"))?;
    }

    let mut enabled = cfg.checks.enabled.clone();
    if opts.mode == Mode::Compare {
        enabled.insert(CheckName::Oracle);
    }
    let ctx = CheckContext {
        cfg,
        chart: &chart,
        forcing: &forcing,
        trace: &trace,
        r0: &prepared.r0,
    };
    let (rates, decay) = ctx.rates();
    let checks = enabled
        .iter()
        .map(|&name| match name {
            CheckName::HigherDerivatives => decay.clone(),
            _ => ctx.check(name).unwrap_or_else(|e| errored(name, &e)),
        })
        .collect();

    Ok(RunReport {
        id: id.to_string(),
        meta: Some(ReportMeta {
            curve: trace.meta.curve.clone(),
            n: trace.meta.n,
            c: trace.meta.c,
            dt: trace.meta.dt,
            t_end: trace.meta.t_end,
        }),
        rates,
        checks,
        error: None,
    })
}

fn check_label(name: CheckName) -> String {
    serde_json::to_value(name)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn errored(name: CheckName, e: &Error) -> CheckOutcome {
    CheckOutcome {
        name: check_label(name),
        pass: false,
        margin: f64::NAN,
        detail: e.to_string(),
        at_time: None,
    }
}

struct CheckContext<'a> {
    cfg: &'a RunConfig,
    chart: &'a AdmissibleChart,
    forcing: &'a ForcingConfig,
    trace: &'a FlowTrace,
    r0: &'a [f64],
}

impl CheckContext<'_> {
    /// Barrier bracket `r1 < min r0`, `max r0 < r2`, widened by 1%.
    fn bracket(&self) -> (f64, f64) {
        let min0 = self.r0.iter().cloned().fold(f64::INFINITY, f64::min);
        let max0 = self.r0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (
            (1.01 * min0).min(-BRACKET_FLOOR),
            (1.01 * max0).max(BRACKET_FLOOR),
        )
    }

    fn t_eps(&self) -> f64 {
        let (r1, r2) = self.bracket();
        t_epsilon(r1, r2, self.forcing.c, self.forcing.eps0_eff)
    }

    fn window(&self) -> (f64, f64) {
        (self.t_eps() + TAIL_OFFSET, self.trace.t_end())
    }

    /// Fitted tail rates for the report and the `higher_derivatives` verdict.
    fn rates(&self) -> (BTreeMap<String, Value>, CheckOutcome) {
        let window = self.window();
        let mut rates = BTreeMap::new();
        match higher_derivative_decay(self.trace, MAX_ORDER, window) {
            Ok(report) => {
                for (m, r) in report.rates.iter().enumerate() {
                    let v = match r {
                        OrderRate::Fitted(f) => Value::from(f.rate),
                        OrderRate::Converged => Value::from("converged"),
                    };
                    rates.insert(format!("m{m}"), v);
                }
                (rates, report.as_outcome(window))
            }
            Err(e) => {
                for m in 0..=MAX_ORDER {
                    rates.insert(format!("m{m}"), Value::Null);
                }
                (rates, errored(CheckName::HigherDerivatives, &e))
            }
        }
    }

    fn check(&self, name: CheckName) -> Result<CheckOutcome> {
        let checks = &self.cfg.checks;
        let c = self.forcing.c;
        match name {
            CheckName::Barrier => {
                let (r1, r2) = self.bracket();
                barrier_check(self.trace, r1, r2, c, checks.barrier_tol)
            }
            CheckName::Gradient => {
                gradient_envelope_check(self.trace, self.forcing.eps0_eff, checks.gradient_slack)
            }
            CheckName::SecondDerivative => second_derivative_envelope_check(
                self.trace,
                c,
                self.window().0,
                checks.second_derivative_slack,
            ),
            CheckName::HigherDerivatives => Ok(self.rates().1),
            CheckName::Oracle => self.oracle(),
            CheckName::ChartRoundtrip => Ok(chart_roundtrip(self.chart, checks.roundtrip_tol)),
        }
    }

    fn oracle(&self) -> Result<CheckOutcome> {
        let last = self
            .trace
            .snapshots
            .last()
            .ok_or_else(|| Error::WindowEmpty("trace has no snapshots".into()))?;
        let start = AmbientPolygon::from_graph(self.chart, self.r0);
        let poly = ambient_run(
            &start,
            self.chart,
            self.forcing,
            self.cfg.checks.oracle_dt,
            last.t,
        )?;
        let d = hausdorff(&poly.points, &self.chart.generated_curve(&last.r));
        let tol = self.cfg.checks.oracle_tol;
        Ok(CheckOutcome {
            name: "oracle".into(),
            pass: d <= tol,
            margin: tol - d,
            detail: format!(
                "Hausdorff distance {d:e} at t = {} ({} vertices, dt {:e})",
                last.t,
                poly.len(),
                self.cfg.checks.oracle_dt
            ),
            at_time: Some(last.t),
        })
    }
}

/// `project(to_ambient(u, r))` recovers `(u, r)` on a lattice strictly inside
/// the margin-shrunk chart.
pub fn chart_roundtrip(chart: &AdmissibleChart, tol: f64) -> CheckOutcome {
    let (stations, offsets) = ROUNDTRIP_LATTICE;
    let length = chart.curve().length();
    let hi = 0.95 * chart.inner_hi();
    let lo = if chart.inner_lo().is_finite() {
        0.95 * chart.inner_lo()
    } else {
        -hi
    };
    let mut worst = 0.0_f64;
    let mut failed_at = None;
    for j in 0..stations {
        let u = (j as f64 + 0.37) * length / stations as f64;
        for i in 0..offsets {
            let r = lo + (hi - lo) * i as f64 / (offsets - 1) as f64;
            let err = chart
                .to_ambient(u, r)
                .ok()
                .and_then(|p| chart.project(p))
                .map(|q| {
                    let du = (q.u - u + 0.5 * length).rem_euclid(length) - 0.5 * length;
                    du.abs().max((q.r - r).abs())
                })
                .unwrap_or(f64::INFINITY);
            if err > worst {
                worst = err;
                failed_at = Some((u, r));
            }
        }
    }
    CheckOutcome {
        name: "chart_roundtrip".into(),
        pass: worst <= tol,
        margin: tol - worst,
        detail: match failed_at {
            Some((u, r)) => format!("worst error {worst:e} at (u, r) = ({u}, {r})"),
            None => "exact".into(),
        },
        at_time: None,
    }
}

/// Run identifier derived from a config path: its file stem.
pub fn id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}
