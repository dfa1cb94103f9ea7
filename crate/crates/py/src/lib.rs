//! Python bindings for `targetflow`.
//!
//! ```python
//! import targetflow_py as tf
//! curve = tf.Curve.bean(512)
//! forcing = tf.select_c(curve)
//! trace = tf.run(curve, forcing, [0.1] * 512, t_end=1.0)
//! ```

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use targetflow::analysis::{self, CheckOutcome, FlowTrace};
use targetflow::{
    admissible_interval, ambient_run, build_target, AdmissibleChart, AmbientPolygon, CurveSpec,
    ForcingConfig, GraphFlow, SolverConfig, TimeStep,
};

fn py_err(e: targetflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A target curve resampled by arclength, together with its admissible chart.
#[pyclass(frozen)]
struct Curve {
    chart: AdmissibleChart,
}

impl Curve {
    fn build(spec: CurveSpec, n: usize) -> PyResult<Self> {
        let curve = Arc::new(build_target(&spec, n).map_err(py_err)?);
        let chart = admissible_interval(curve).map_err(py_err)?;
        Ok(Self { chart })
    }
}

#[pymethods]
impl Curve {
    #[staticmethod]
    #[pyo3(signature = (radius, n = 512))]
    fn circle(radius: f64, n: usize) -> PyResult<Self> {
        Self::build(CurveSpec::circle(radius), n)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, n = 512))]
    fn ellipse(a: f64, b: f64, n: usize) -> PyResult<Self> {
        Self::build(CurveSpec::ellipse(a, b), n)
    }

    #[staticmethod]
    #[pyo3(signature = (n = 512))]
    fn bean(n: usize) -> PyResult<Self> {
        Self::build(CurveSpec::Bean, n)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.chart.curve().spec().name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.chart.curve().n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.chart.curve().length()
    }

    #[getter]
    fn kmin(&self) -> f64 {
        self.chart.curve().kmin()
    }

    #[getter]
    fn kmax(&self) -> f64 {
        self.chart.curve().kmax()
    }

    #[getter]
    fn r_lo(&self) -> f64 {
        self.chart.r_lo()
    }

    #[getter]
    fn r_hi(&self) -> f64 {
        self.chart.r_hi()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.chart.curve().u().to_vec()
    }

    #[getter]
    fn k(&self) -> Vec<f64> {
        self.chart.curve().k().to_vec()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.chart
            .curve()
            .position()
            .iter()
            .map(|p| (p[0], p[1]))
            .collect()
    }

    #[getter]
    fn normals(&self) -> Vec<(f64, f64)> {
        self.chart
            .curve()
            .normal()
            .iter()
            .map(|p| (p[0], p[1]))
            .collect()
    }

    fn to_ambient(&self, u: f64, r: f64) -> PyResult<(f64, f64)> {
        let p = self.chart.to_ambient(u, r).map_err(py_err)?;
        Ok((p[0], p[1]))
    }

    /// Normal coordinates `(u, r)` of a point, or `None` outside the chart.
    fn project(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        self.chart.project([x, y]).map(|c| (c.u, c.r))
    }

    /// Points `eta(u_i) + r_i nu(u_i)` of the curve generated by nodal values.
    fn generated_curve(&self, r: Vec<f64>) -> Vec<(f64, f64)> {
        self.chart
            .generated_curve(&r)
            .iter()
            .map(|p| (p[0], p[1]))
            .collect()
    }

    fn derivative(&self, values: Vec<f64>, order: usize) -> PyResult<Vec<f64>> {
        if values.len() != self.chart.curve().n() || order == 0 {
            return Err(PyValueError::new_err("need n values and order >= 1"));
        }
        Ok(self.chart.curve().derivative(&values, order))
    }

    fn __repr__(&self) -> String {
        format!(
            "Curve({}, n={}, L={})",
            self.name(),
            self.n(),
            self.length()
        )
    }
}

#[pyclass(frozen)]
struct Forcing {
    cfg: ForcingConfig,
}

#[pymethods]
impl Forcing {
    #[getter(C)]
    fn c(&self) -> f64 {
        self.cfg.c
    }

    #[getter]
    fn eps0_eff(&self) -> f64 {
        self.cfg.eps0_eff
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.cfg.delta
    }

    #[getter]
    fn c3(&self) -> f64 {
        self.cfg.c3
    }

    #[getter]
    fn c4(&self) -> f64 {
        self.cfg.c4
    }

    #[getter(C0)]
    fn c0(&self) -> f64 {
        self.cfg.c0
    }

    #[getter]
    fn overridden(&self) -> bool {
        self.cfg.overridden
    }

    /// Forcing vector at an ambient point; zero outside the chart.
    fn eval_v(&self, curve: &Curve, x: f64, y: f64) -> (f64, f64) {
        let v = targetflow::eval_v(&curve.chart, &self.cfg, [x, y]);
        (v[0], v[1])
    }

    fn __repr__(&self) -> String {
        format!("Forcing(C={}, C0={})", self.cfg.c, self.cfg.c0)
    }
}

#[pyfunction]
#[pyo3(signature = (curve, override_c = None))]
fn select_c(curve: &Curve, override_c: Option<f64>) -> PyResult<Forcing> {
    let cfg =
        targetflow::select_c(curve.chart.curve(), &curve.chart, override_c).map_err(py_err)?;
    Ok(Forcing { cfg })
}

#[pyfunction]
fn f_scalar(r: f64, k: f64, c: f64) -> PyResult<f64> {
    targetflow::f_scalar(r, k, c).map_err(py_err)
}

#[pyclass(frozen)]
struct Trace {
    inner: FlowTrace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    /// `norms[m][i]` is `sup |d^m r / du^m|` at `times[i]`.
    #[getter]
    fn norms(&self) -> Vec<Vec<f64>> {
        self.inner.norms.to_vec()
    }

    #[getter]
    fn snapshot_times(&self) -> Vec<f64> {
        self.inner.snapshots.iter().map(|s| s.t).collect()
    }

    #[getter]
    fn snapshots(&self) -> Vec<Vec<f64>> {
        self.inner.snapshots.iter().map(|s| s.r.clone()).collect()
    }

    #[getter(C)]
    fn c(&self) -> f64 {
        self.inner.meta.c
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.meta.dt
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Integrate the graph flow from nodal values `r0`. `dt=None` picks the
/// automatic step; `tol_stop=None` runs to `t_end` regardless of `sup |r|`.
#[pyfunction]
#[pyo3(signature = (curve, forcing, r0, t_end = 3.0, dt = None, snapshot_every = 10, record_every = None, tol_stop = None))]
#[allow(clippy::too_many_arguments)]
fn run(
    curve: &Curve,
    forcing: &Forcing,
    r0: Vec<f64>,
    t_end: f64,
    dt: Option<f64>,
    snapshot_every: usize,
    record_every: Option<usize>,
    tol_stop: Option<f64>,
) -> PyResult<Trace> {
    let flow = GraphFlow::new(curve.chart.clone(), forcing.cfg);
    let solver = SolverConfig {
        dt: dt.map_or(TimeStep::Auto, TimeStep::Fixed),
        t_end,
        snapshot_every,
        record_every,
        tol_stop,
    };
    let inner = flow.run(&r0, &solver).map_err(py_err)?;
    Ok(Trace { inner })
}

/// Final polygon of the ambient front-tracking solver started from the
/// curve generated by `r0`.
#[pyfunction]
fn ambient(
    curve: &Curve,
    forcing: &Forcing,
    r0: Vec<f64>,
    dt: f64,
    t_end: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let start = AmbientPolygon::from_graph(&curve.chart, &r0);
    let poly = ambient_run(&start, &curve.chart, &forcing.cfg, dt, t_end).map_err(py_err)?;
    Ok(poly.points.iter().map(|p| (p[0], p[1])).collect())
}

#[pyfunction]
fn hausdorff(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> f64 {
    let pa: Vec<[f64; 2]> = a.into_iter().map(|(x, y)| [x, y]).collect();
    let pb: Vec<[f64; 2]> = b.into_iter().map(|(x, y)| [x, y]).collect();
    targetflow::hausdorff(&pa, &pb)
}

#[pyclass(frozen, get_all)]
struct Check {
    name: String,
    passed: bool,
    margin: f64,
    detail: String,
}

#[pymethods]
impl Check {
    fn __bool__(&self) -> bool {
        self.passed
    }

    fn __repr__(&self) -> String {
        format!(
            "Check({}, passed={}, margin={:e})",
            self.name, self.passed, self.margin
        )
    }
}

impl From<CheckOutcome> for Check {
    fn from(c: CheckOutcome) -> Self {
        Self {
            name: c.name,
            passed: c.pass,
            margin: c.margin,
            detail: c.detail,
        }
    }
}

#[pyfunction]
#[pyo3(signature = (trace, r1, r2, c, tol = analysis::BARRIER_TOL))]
fn barrier_check(trace: &Trace, r1: f64, r2: f64, c: f64, tol: f64) -> PyResult<Check> {
    analysis::barrier_check(&trace.inner, r1, r2, c, tol)
        .map(Check::from)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (trace, eps0, slack = analysis::GRADIENT_SLACK))]
fn gradient_envelope_check(trace: &Trace, eps0: f64, slack: f64) -> PyResult<Check> {
    analysis::gradient_envelope_check(&trace.inner, eps0, slack)
        .map(Check::from)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (trace, c, t0, slack = analysis::SECOND_DERIVATIVE_SLACK))]
fn second_derivative_envelope_check(trace: &Trace, c: f64, t0: f64, slack: f64) -> PyResult<Check> {
    analysis::second_derivative_envelope_check(&trace.inner, c, t0, slack)
        .map(Check::from)
        .map_err(py_err)
}

#[pyfunction]
fn t_epsilon(r1: f64, r2: f64, c: f64, eps: f64) -> f64 {
    analysis::t_epsilon(r1, r2, c, eps)
}

/// `(rate, amplitude, residual)` of a log-linear fit on `[a, b]`.
#[pyfunction]
fn fit_decay_rate(times: Vec<f64>, values: Vec<f64>, a: f64, b: f64) -> PyResult<(f64, f64, f64)> {
    let f = analysis::fit_decay_rate(&times, &values, (a, b)).map_err(py_err)?;
    Ok((f.rate, f.amplitude, f.residual))
}

/// Fitted rate per order `0..=max_order` on `[a, b]`; `None` marks an
/// order whose norms have converged to zero.
#[pyfunction]
#[pyo3(signature = (trace, a, b, max_order = analysis::MAX_ORDER))]
fn higher_derivative_decay(
    trace: &Trace,
    a: f64,
    b: f64,
    max_order: usize,
) -> PyResult<Vec<Option<f64>>> {
    let report =
        analysis::higher_derivative_decay(&trace.inner, max_order, (a, b)).map_err(py_err)?;
    Ok(report.rates.iter().map(|r| r.rate()).collect())
}

#[pymodule]
pub fn targetflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Curve>()?;
    m.add_class::<Forcing>()?;
    m.add_class::<Trace>()?;
    m.add_class::<Check>()?;
    m.add_function(wrap_pyfunction!(select_c, m)?)?;
    m.add_function(wrap_pyfunction!(f_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(ambient, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(barrier_check, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_envelope_check, m)?)?;
    m.add_function(wrap_pyfunction!(second_derivative_envelope_check, m)?)?;
    m.add_function(wrap_pyfunction!(t_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(higher_derivative_decay, m)?)?;
    Ok(())
}
