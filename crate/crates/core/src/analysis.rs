//! Flow traces and the quantitative checks run on them: barrier envelopes,
//! gradient and second-derivative decay envelopes, `T_eps` bounds and fitted
//! exponential rates.

use serde::Serialize;

use crate::error::{Error, Result};

/// Highest derivative order tracked in a [`FlowTrace`].
pub const MAX_ORDER: usize = 4;
/// Norms at or below this level count as converged.
pub const CONVERGED_LEVEL: f64 = 1e-13;
/// Default tolerance of the barrier envelope.
pub const BARRIER_TOL: f64 = 1e-8;
/// Default multiplicative slack of the gradient envelope.
pub const GRADIENT_SLACK: f64 = 0.05;
/// Default multiplicative slack of the second-derivative envelope.
pub const SECOND_DERIVATIVE_SLACK: f64 = 0.10;
/// Tail windows start this long after the `T_eps` bound.
pub const TAIL_OFFSET: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMeta {
    pub curve: String,
    #[serde(rename = "C")]
    pub c: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Period of the arclength grid.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub r: Vec<f64>,
}

/// Time series of `sup |d^m r / du^m|`, `m = 0..=4`, with sparse full snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub norms: [Vec<f64>; MAX_ORDER + 1],
    pub snapshots: Vec<Snapshot>,
    pub meta: TraceMeta,
}

impl FlowTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            times: Vec::new(),
            norms: Default::default(),
            snapshots: Vec::new(),
            meta,
        }
    }

    pub fn push(&mut self, t: f64, norms: [f64; MAX_ORDER + 1], snapshot: Option<Vec<f64>>) {
        self.times.push(t);
        for (series, v) in self.norms.iter_mut().zip(norms) {
            series.push(v);
        }
        if let Some(r) = snapshot {
            self.snapshots.push(Snapshot { t, r });
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Times strictly increasing, norm series aligned, values finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| {
            Err(Error::Validation {
                field: "trace".into(),
                message: m.into(),
            })
        };
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("times are not strictly increasing");
        }
        if self.norms.iter().any(|s| s.len() != self.times.len()) {
            return bad("norm series length differs from time series");
        }
        if self
            .norms
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return bad("norm values must be finite and non-negative");
        }
        Ok(())
    }

    /// First recorded time after which `sup |r| < eps` at every later record.
    pub fn first_time_below(&self, eps: f64) -> Option<f64> {
        let sup = &self.norms[0];
        let mut idx = None;
        for i in (0..sup.len()).rev() {
            if sup[i] < eps {
                idx = Some(i);
            } else {
                break;
            }
        }
        idx.map(|i| self.times[i])
    }
}

/// Outcome of one check, as serialized into run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    /// Worst signed margin; negative values indicate a violation.
    pub margin: f64,
    pub detail: String,
    #[serde(skip)]
    pub at_time: Option<f64>,
}

/// Check `r1 e^{-Ct} - tol <= r(u, t) <= r2 e^{-Ct} + tol` on every snapshot.
///
/// The reported margin is measured against the exact envelope (without
/// `tol`), so the check passes iff `margin >= -tol`.
pub fn barrier_check(
    trace: &FlowTrace,
    r1: f64,
    r2: f64,
    c: f64,
    tol: f64,
) -> Result<CheckOutcome> {
    let first = trace
        .snapshots
        .first()
        .filter(|s| s.t == 0.0)
        .ok_or_else(|| Error::BracketInvalid("trace has no initial snapshot".into()))?;
    let min0 = first.r.iter().cloned().fold(f64::INFINITY, f64::min);
    let max0 = first.r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(r1 <= 0.0 && r2 >= 0.0) {
        return Err(Error::BracketInvalid(format!(
            "need r1 <= 0 <= r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    if !(r1 < min0 && max0 < r2) {
        return Err(Error::BracketInvalid(format!(
            "initial data range [{min0}, {max0}] is not strictly inside ({r1}, {r2})"
        )));
    }

    let mut worst = f64::INFINITY;
    let mut worst_at = (0.0, 0usize);
    for snap in &trace.snapshots {
        let decay = (-c * snap.t).exp();
        let (lo, hi) = (r1 * decay, r2 * decay);
        for (i, &r) in snap.r.iter().enumerate() {
            let m = (r - lo).min(hi - r);
            if m < worst {
                worst = m;
                worst_at = (snap.t, i);
            }
        }
    }
    Ok(CheckOutcome {
        name: "barrier".into(),
        pass: worst >= -tol,
        margin: worst,
        detail: format!(
            "worst margin at t = {}, node {} over {} snapshots (tol {tol:e})",
            worst_at.0,
            worst_at.1,
            trace.snapshots.len()
        ),
        at_time: Some(worst_at.0),
    })
}

/// Upper bound `(1/C) log(max{|r1|, r2} / eps)` on `T_eps`, clamped at 0.
pub fn t_epsilon(r1: f64, r2: f64, c: f64, eps: f64) -> f64 {
    let top = r1.abs().max(r2);
    ((top / eps).ln() / c).max(0.0)
}

/// Analysis tail window `[T_eps bound + 1, t_end]`.
pub fn tail_window(trace: &FlowTrace, r1: f64, r2: f64, c: f64, eps: f64) -> (f64, f64) {
    (t_epsilon(r1, r2, c, eps) + TAIL_OFFSET, trace.t_end())
}

/// Check `|r_u(t)| <= (1 + slack) e^{(T* - t)/2} |r_u(T*)|` for recorded
/// `t > T*`, where `T*` is the first time after which `sup |r| < eps0`.
pub fn gradient_envelope_check(trace: &FlowTrace, eps0: f64, slack: f64) -> Result<CheckOutcome> {
    let t_star = trace
        .first_time_below(eps0)
        .ok_or_else(|| Error::WindowEmpty(format!("sup |r| never drops below {eps0}")))?;
    let i0 = trace.times.iter().position(|&t| t == t_star).unwrap();
    if i0 + 1 >= trace.len() {
        return Err(Error::WindowEmpty(format!("no record after T* = {t_star}")));
    }
    let base = trace.norms[1][i0];
    let mut worst = f64::INFINITY;
    let mut worst_t = t_star;
    for i in i0 + 1..trace.len() {
        let t = trace.times[i];
        let bound = (1.0 + slack) * (0.5 * (t_star - t)).exp() * base;
        let m = bound - trace.norms[1][i];
        if m < worst {
            worst = m;
            worst_t = t;
        }
    }
    Ok(CheckOutcome {
        name: "gradient".into(),
        pass: worst >= 0.0,
        margin: worst,
        detail: format!(
            "T* = {t_star}, |r_u(T*)| = {base:e}, worst at t = {worst_t} (slack {slack})"
        ),
        at_time: Some(worst_t),
    })
}

/// Check `r_uu(t)^2 <= (1 + slack) (r_uu(t0)^2 + A0 e^{-t0}) e^{(t0 - t) C / 2}`
/// for recorded `t > t0`, with `A0 = 2 r_uu(t0)^2`. `t0` is snapped to the
/// first record at or after the requested start.
pub fn second_derivative_envelope_check(
    trace: &FlowTrace,
    c: f64,
    t0: f64,
    slack: f64,
) -> Result<CheckOutcome> {
    let i0 = trace
        .times
        .iter()
        .position(|&t| t >= t0)
        .ok_or_else(|| Error::WindowEmpty(format!("trace ends before t0 = {t0}")))?;
    if i0 + 1 >= trace.len() {
        return Err(Error::WindowEmpty(format!("no record after t0 = {t0}")));
    }
    let t0 = trace.times[i0];
    let n0 = trace.norms[2][i0].powi(2);
    let a0 = 2.0 * n0;
    let head = (1.0 + slack) * (n0 + a0 * (-t0).exp());
    let mut worst = f64::INFINITY;
    let mut worst_t = t0;
    for i in i0 + 1..trace.len() {
        let t = trace.times[i];
        let bound = head * ((t0 - t) * c / 2.0).exp();
        let m = bound - trace.norms[2][i].powi(2);
        if m < worst {
            worst = m;
            worst_t = t;
        }
    }
    Ok(CheckOutcome {
        name: "second_derivative".into(),
        pass: worst >= 0.0,
        margin: worst,
        detail: format!("t0 = {t0}, r_uu(t0)^2 = {n0:e}, worst at t = {worst_t} (slack {slack})"),
        at_time: Some(worst_t),
    })
}

/// Least-squares fit `v ~ A e^{-rate t}` in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub samples: usize,
}

pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (a, b) = window;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= a && **t <= b)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 5 {
        return Err(Error::WindowEmpty(format!(
            "{} samples in [{a}, {b}], need at least 5",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonpositiveValues(format!("value {v} at t = {t}")));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sty, mut stt) = (0.0, 0.0);
    for &(t, v) in &pts {
        sty += (t - tm) * (v.ln() - ym);
        stt += (t - tm) * (t - tm);
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let residual = (pts
        .iter()
        .map(|&(t, v)| (v.ln() - intercept - slope * t).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(DecayFit {
        rate: -slope,
        amplitude: intercept.exp(),
        residual,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderRate {
    Fitted(DecayFit),
    /// All norms of this order in the window are at or below [`CONVERGED_LEVEL`]
    /// and at least one is exactly zero.
    Converged,
}

impl OrderRate {
    /// Fitted rate, or `None` for converged orders.
    pub fn rate(&self) -> Option<f64> {
        match self {
            OrderRate::Fitted(f) => Some(f.rate),
            OrderRate::Converged => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub rates: Vec<OrderRate>,
    pub pass: bool,
    /// Orders whose fitted rate is not strictly positive.
    pub failing: Vec<usize>,
}

/// Fit an exponential rate to `sup |d^m r|` for `m = 0..=max_order` on `window`.
pub fn higher_derivative_decay(
    trace: &FlowTrace,
    max_order: usize,
    window: (f64, f64),
) -> Result<DecayReport> {
    let max_order = max_order.min(MAX_ORDER);
    let mut rates = Vec::with_capacity(max_order + 1);
    let mut failing = Vec::new();
    for m in 0..=max_order {
        let in_window: Vec<f64> = trace
            .times
            .iter()
            .zip(&trace.norms[m])
            .filter(|(t, _)| **t >= window.0 && **t <= window.1)
            .map(|(_, &v)| v)
            .collect();
        let all_positive = !in_window.is_empty() && in_window.iter().all(|&v| v > 0.0);
        let tiny = in_window.iter().all(|&v| v <= CONVERGED_LEVEL);
        let rate = if !all_positive && tiny {
            OrderRate::Converged
        } else {
            OrderRate::Fitted(fit_decay_rate(&trace.times, &trace.norms[m], window)?)
        };
        if let OrderRate::Fitted(f) = rate {
            if !(f.rate > 0.0) {
                failing.push(m);
            }
        }
        rates.push(rate);
    }
    Ok(DecayReport {
        pass: failing.is_empty(),
        rates,
        failing,
    })
}

impl DecayReport {
    pub fn as_outcome(&self, window: (f64, f64)) -> CheckOutcome {
        let min_rate = self
            .rates
            .iter()
            .filter_map(|r| r.rate())
            .fold(f64::INFINITY, f64::min);
        let detail = if self.failing.is_empty() {
            format!("all orders decay on [{}, {}]", window.0, window.1)
        } else {
            format!(
                "non-decaying orders {:?} on [{}, {}]",
                self.failing, window.0, window.1
            )
        };
        CheckOutcome {
            name: "higher_derivatives".into(),
            pass: self.pass,
            margin: if min_rate.is_finite() { min_rate } else { 0.0 },
            detail,
            at_time: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TraceMeta {
        TraceMeta {
            curve: "synthetic".into(),
            c: 7.0,
            n: 4,
            dt: 0.01,
            t_end: 3.0,
            length: 1.0,
        }
    }

    fn synthetic(times: &[f64], f: impl Fn(usize, f64) -> f64) -> FlowTrace {
        let mut tr = FlowTrace::new(meta());
        for &t in times {
            let norms = [f(0, t), f(1, t), f(2, t), f(3, t), f(4, t)];
            tr.push(t, norms, None);
        }
        tr
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn fit_recovers_pure_exponentials() {
        let t = grid(0.0, 3.0, 100);
        let v: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &v, (0.0, 3.0)).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-9);
        assert!(f.residual <= 1e-12);
        let v: Vec<f64> = t.iter().map(|t| 5.0 * (-0.5 * t).exp()).collect();
        let f = fit_decay_rate(&t, &v, (0.0, 3.0)).unwrap();
        assert!((f.rate - 0.5).abs() < 1e-9 && (f.amplitude - 5.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_nonpositive_values_and_short_windows() {
        let t = grid(0.0, 1.0, 10);
        let mut v = vec![1.0; 10];
        v[3] = 0.0;
        assert!(matches!(
            fit_decay_rate(&t, &v, (0.0, 1.0)),
            Err(Error::NonpositiveValues(_))
        ));
        assert!(matches!(
            fit_decay_rate(&t, &v, (0.0, 0.2)),
            Err(Error::WindowEmpty(_))
        ));
    }

    #[test]
    fn t_epsilon_formula_and_clamp() {
        assert!((t_epsilon(-0.5, 0.5, 7.0, 0.05) - 10f64.ln() / 7.0).abs() < 1e-15);
        assert!((t_epsilon(-0.5, 0.5, 7.0, 0.05) - 0.328_940_73).abs() < 1e-8);
        assert_eq!(t_epsilon(-0.5, 0.3, 7.0, 0.5), 0.0);
        assert_eq!(t_epsilon(-0.1, 0.3, 7.0, 2.0), 0.0);
    }

    #[test]
    fn barrier_passes_on_exact_exponential() {
        let mut tr = FlowTrace::new(meta());
        for t in grid(0.0, 1.0, 11) {
            let r = 0.5 * (-7.0 * t).exp();
            tr.push(t, [r, 0.0, 0.0, 0.0, 0.0], Some(vec![r; 4]));
        }
        let out = barrier_check(&tr, -0.1, 0.6, 7.0, BARRIER_TOL).unwrap();
        assert!(out.pass && out.margin > 0.0);
    }

    #[test]
    fn barrier_reports_violation_time() {
        let mut tr = FlowTrace::new(meta());
        for t in grid(0.0, 1.0, 11) {
            let mut r = 0.5 * (-7.0 * t).exp();
            if (t - 0.6).abs() < 1e-12 {
                r += 0.01;
            }
            tr.push(t, [r, 0.0, 0.0, 0.0, 0.0], Some(vec![r; 4]));
        }
        let out = barrier_check(&tr, -0.1, 0.6, 7.0, BARRIER_TOL).unwrap();
        assert!(!out.pass);
        assert!((out.at_time.unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn barrier_rejects_bad_bracket() {
        let mut tr = FlowTrace::new(meta());
        tr.push(0.0, [0.5; 5], Some(vec![0.5; 4]));
        assert!(matches!(
            barrier_check(&tr, -0.1, 0.4, 7.0, 1e-8),
            Err(Error::BracketInvalid(_))
        ));
        assert!(matches!(
            barrier_check(&tr, 0.1, 0.6, 7.0, 1e-8),
            Err(Error::BracketInvalid(_))
        ));
    }

    #[test]
    fn gradient_envelope_cases() {
        let t = grid(0.0, 3.0, 61);
        let flat = synthetic(&t, |m, t| if m == 0 { 0.1 * (-t).exp() } else { 0.0 });
        assert!(
            gradient_envelope_check(&flat, 0.5, GRADIENT_SLACK)
                .unwrap()
                .pass
        );
        let fast = synthetic(&t, |m, t| match m {
            0 => 0.1 * (-t).exp(),
            1 => (-t).exp(),
            _ => 0.0,
        });
        assert!(
            gradient_envelope_check(&fast, 0.5, GRADIENT_SLACK)
                .unwrap()
                .pass
        );
        let slow = synthetic(&t, |m, t| match m {
            0 => 0.1 * (-t).exp(),
            1 => (-0.1 * t).exp(),
            _ => 0.0,
        });
        assert!(
            !gradient_envelope_check(&slow, 0.5, GRADIENT_SLACK)
                .unwrap()
                .pass
        );
        assert!(matches!(
            gradient_envelope_check(&fast, 1e-9, GRADIENT_SLACK),
            Err(Error::WindowEmpty(_))
        ));
    }

    #[test]
    fn second_derivative_envelope_cases() {
        let t = grid(0.0, 3.0, 61);
        let sat = synthetic(&t, |m, t| if m == 2 { (-7.0 * t / 4.0).exp() } else { 1.0 });
        assert!(
            second_derivative_envelope_check(&sat, 7.0, 0.0, SECOND_DERIVATIVE_SLACK)
                .unwrap()
                .pass
        );
        let flat = synthetic(&t, |_, _| 1.0);
        let out =
            second_derivative_envelope_check(&flat, 7.0, 0.0, SECOND_DERIVATIVE_SLACK).unwrap();
        assert!(!out.pass);
        assert!(matches!(
            second_derivative_envelope_check(&flat, 7.0, 5.0, 0.1),
            Err(Error::WindowEmpty(_))
        ));
    }

    #[test]
    fn higher_derivative_decay_flags_growing_order() {
        let t = grid(0.0, 3.0, 61);
        let tr = synthetic(&t, |m, t| {
            if m == 3 {
                (0.2 * t).exp()
            } else {
                (-(m as f64 + 1.0) * t).exp()
            }
        });
        let rep = higher_derivative_decay(&tr, 4, (1.0, 3.0)).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.failing, vec![3]);
    }

    #[test]
    fn higher_derivative_decay_reports_converged_orders() {
        let t = grid(0.0, 3.0, 61);
        let tr = synthetic(&t, |m, t| if m == 0 { 0.5 * (-7.0 * t).exp() } else { 0.0 });
        let rep = higher_derivative_decay(&tr, 4, (1.0, 3.0)).unwrap();
        assert!(rep.pass);
        assert!((rep.rates[0].rate().unwrap() - 7.0).abs() < 1e-9);
        assert!(rep.rates[1..].iter().all(|r| *r == OrderRate::Converged));
    }

    #[test]
    fn first_time_below_requires_staying_below() {
        let tr = synthetic(&[0.0, 1.0, 2.0, 3.0], |_, t| {
            [0.5, 0.05, 0.2, 0.01][t as usize]
        });
        assert_eq!(tr.first_time_below(0.1), Some(3.0));
        assert_eq!(tr.first_time_below(1.0), Some(0.0));
        assert_eq!(tr.first_time_below(0.001), None);
    }
}
