//! Method-of-lines solver for the graph function `r(u, t)` of the target flow:
//!
//! ```text
//! r_t = r_uu / v + r_u (k r)_u / (v (1 - k r)) - C r,   v = (1 - k r)^2 + r_u^2
//! ```
//!
//! on the periodic arclength grid of the target, with spectral derivatives in
//! space and classical fourth-order Runge-Kutta in time.

use serde::{Deserialize, Serialize};

use crate::analysis::{FlowTrace, TraceMeta, MAX_ORDER};
use crate::chart::AdmissibleChart;
use crate::curve::TargetCurve;
use crate::error::{Error, Result};
use crate::forcing::ForcingConfig;

/// Safety factor of the automatic step `0.2 h^2 min(delta^2, inf v)`.
pub const AUTO_DT_FACTOR: f64 = 0.2;
/// Default early-stop threshold on `sup |r|`.
pub const DEFAULT_TOL_STOP: f64 = 1e-12;
/// Upper bound on recorded norm samples when `record_every` is automatic.
const TARGET_RECORDS: usize = 2000;

/// Time step choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    #[serde(with = "auto_literal")]
    Auto,
}

pub(crate) mod auto_literal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a number, got {s:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: TimeStep,
    pub t_end: f64,
    /// Full snapshots are kept every `snapshot_every` norm records.
    pub snapshot_every: usize,
    /// Steps between norm records; `None` picks a stride giving about 2000 records.
    pub record_every: Option<usize>,
    /// Stop once `sup |r|` drops below this value.
    pub tol_stop: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto,
            t_end: 3.0,
            snapshot_every: 10,
            record_every: None,
            tol_stop: Some(DEFAULT_TOL_STOP),
        }
    }
}

/// Graph function values at the curve nodes at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub t: f64,
    pub r: Vec<f64>,
}

impl GraphState {
    pub fn new(r: Vec<f64>) -> Self {
        Self { t: 0.0, r }
    }
}

/// The graph PDE for one target curve and forcing strength.
#[derive(Debug, Clone)]
pub struct GraphFlow {
    chart: AdmissibleChart,
    forcing: ForcingConfig,
}

impl GraphFlow {
    pub fn new(chart: AdmissibleChart, forcing: ForcingConfig) -> Self {
        Self { chart, forcing }
    }

    pub fn chart(&self) -> &AdmissibleChart {
        &self.chart
    }

    pub fn curve(&self) -> &TargetCurve {
        self.chart.curve()
    }

    pub fn forcing(&self) -> &ForcingConfig {
        &self.forcing
    }

    /// Check the graph and denominator invariants of nodal values `r`.
    pub fn validate(&self, r: &[f64]) -> Result<()> {
        let n = self.curve().n();
        if r.len() != n {
            return Err(Error::InvalidInitialData(format!(
                "expected {n} nodal values, got {}",
                r.len()
            )));
        }
        for (i, &ri) in r.iter().enumerate() {
            if !ri.is_finite() || !self.chart.admits(ri) {
                return Err(Error::InvalidInitialData(format!(
                    "r = {ri} at node {i} is outside the admissible interval ({}, {})",
                    self.chart.r_lo(),
                    self.chart.r_hi()
                )));
            }
        }
        self.check_denominators(r)
    }

    fn check_denominators(&self, r: &[f64]) -> Result<()> {
        let bound = 0.5 * self.forcing.delta;
        for (i, (&k, &ri)) in self.curve().k().iter().zip(r).enumerate() {
            let value = 1.0 - k * ri;
            if !(value >= bound) {
                return Err(Error::DenominatorBreach {
                    node: i,
                    value,
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Nodal right-hand side of the graph PDE.
    pub fn rhs(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check_denominators(r)?;
        let curve = self.curve();
        let diff = curve.differentiator();
        let d = diff.derivatives(r, 2);
        let (ru, ruu) = (&d[0], &d[1]);
        let kr: Vec<f64> = curve.k().iter().zip(r).map(|(k, r)| k * r).collect();
        let kr_u = diff.derivative(&kr, 1);
        let c = self.forcing.c;
        Ok((0..r.len())
            .map(|i| {
                let a = 1.0 - kr[i];
                let v = a * a + ru[i] * ru[i];
                ruu[i] / v + ru[i] * kr_u[i] / (v * a) - c * r[i]
            })
            .collect())
    }

    /// `0.2 h^2 min(delta^2, min_i (1 - k_i r_i)^2)` for grid spacing `h`.
    pub fn auto_dt(&self, r: &[f64]) -> f64 {
        let h = self.curve().spacing();
        let inf_v = self
            .curve()
            .k()
            .iter()
            .zip(r)
            .map(|(k, r)| (1.0 - k * r).powi(2))
            .fold(f64::INFINITY, f64::min);
        AUTO_DT_FACTOR * h * h * inf_v.min(self.forcing.delta.powi(2))
    }

    /// One classical Runge-Kutta step.
    pub fn step(&self, state: &GraphState, dt: f64) -> Result<GraphState> {
        let r = &state.r;
        let axpy =
            |a: f64, k: &[f64]| -> Vec<f64> { r.iter().zip(k).map(|(x, k)| x + a * k).collect() };
        let s1 = self.rhs(r)?;
        let s2 = self.rhs(&axpy(0.5 * dt, &s1))?;
        let s3 = self.rhs(&axpy(0.5 * dt, &s2))?;
        let s4 = self.rhs(&axpy(dt, &s3))?;
        let next: Vec<f64> = (0..r.len())
            .map(|i| r[i] + dt / 6.0 * (s1[i] + 2.0 * s2[i] + 2.0 * s3[i] + s4[i]))
            .collect();
        let t = state.t + dt;
        for (node, &ri) in next.iter().enumerate() {
            if !ri.is_finite() || !self.chart.admits(ri) {
                return Err(Error::GraphicalityLost { node, r: ri, t });
            }
        }
        Ok(GraphState { t, r: next })
    }

    /// Sup-norms of `r` and its first four arclength derivatives.
    pub fn derivative_norms(&self, r: &[f64]) -> [f64; MAX_ORDER + 1] {
        let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut out = [0.0; MAX_ORDER + 1];
        out[0] = sup(r);
        for (m, d) in self
            .curve()
            .differentiator()
            .derivatives(r, MAX_ORDER)
            .iter()
            .enumerate()
        {
            out[m + 1] = sup(d);
        }
        out
    }

    /// Integrate from `r0` to `solver.t_end` (or until `sup |r| < tol_stop`).
    pub fn run(&self, r0: &[f64], solver: &SolverConfig) -> Result<FlowTrace> {
        self.validate(r0)?;
        if !(solver.t_end > 0.0) {
            return Err(Error::Validation {
                field: "t_end".into(),
                message: format!("must be positive, got {}", solver.t_end),
            });
        }
        let dt_auto = self.auto_dt(r0);
        let dt_req = match solver.dt {
            TimeStep::Auto => dt_auto,
            TimeStep::Fixed(dt) if dt > 0.0 => {
                if dt > dt_auto {
                    log::warn!("time step {dt:e} exceeds the stability estimate {dt_auto:e}");
                }
                dt
            }
            TimeStep::Fixed(dt) => {
                return Err(Error::Validation {
                    field: "dt".into(),
                    message: format!("must be positive, got {dt}"),
                })
            }
        };
        let steps = ((solver.t_end / dt_req) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = solver.t_end / steps as f64;
        let stride = solver
            .record_every
            .unwrap_or_else(|| steps.div_ceil(TARGET_RECORDS))
            .max(1);
        let snapshot_every = solver.snapshot_every.max(1);

        let curve = self.curve();
        let mut trace = FlowTrace::new(TraceMeta {
            curve: curve.spec().name().to_string(),
            c: self.forcing.c,
            n: curve.n(),
            dt,
            t_end: solver.t_end,
            length: curve.length(),
        });
        let mut state = GraphState::new(r0.to_vec());
        let mut records = 0usize;
        let mut record = |trace: &mut FlowTrace, state: &GraphState, force_snapshot: bool| {
            let norms = self.derivative_norms(&state.r);
            let snap = force_snapshot || records.is_multiple_of(snapshot_every);
            trace.push(state.t, norms, snap.then(|| state.r.clone()));
            records += 1;
        };

        record(&mut trace, &state, true);
        for step in 1..=steps {
            state = self.step(&state, dt)?;
            if step == steps {
                // land exactly on t_end
                state.t = solver.t_end;
            }
            let sup = state.r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let stop = solver.tol_stop.is_some_and(|tol| sup < tol);
            if step % stride == 0 || step == steps || stop {
                record(&mut trace, &state, step == steps || stop);
            }
            if stop {
                break;
            }
        }
        Ok(trace)
    }
}

/// Generated-curve identities in graph coordinates.
pub mod graph_geometry {
    use crate::curve::TargetCurve;

    /// `nu^eta . nu = (1 - k r) / sqrt(v)` at each node.
    pub fn normal_alignment(curve: &TargetCurve, r: &[f64]) -> Vec<f64> {
        let ru = curve.derivative(r, 1);
        curve
            .k()
            .iter()
            .zip(r)
            .zip(&ru)
            .map(|((k, r), ru)| {
                let a = 1.0 - k * r;
                a / (a * a + ru * ru).sqrt()
            })
            .collect()
    }

    /// Curvature of the generated curve from graph data:
    /// `((1 - k r) r_uu + k v + r_u (k r)_u) / v^{3/2}`.
    pub fn curvature(curve: &TargetCurve, r: &[f64]) -> Vec<f64> {
        let d = curve.differentiator().derivatives(r, 2);
        let kr: Vec<f64> = curve.k().iter().zip(r).map(|(k, r)| k * r).collect();
        let kr_u = curve.derivative(&kr, 1);
        (0..r.len())
            .map(|i| {
                let k = curve.k()[i];
                let a = 1.0 - kr[i];
                let v = a * a + d[0][i] * d[0][i];
                (a * d[1][i] + k * v + d[0][i] * kr_u[i]) / v.powf(1.5)
            })
            .collect()
    }
}
