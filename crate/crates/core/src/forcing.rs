//! The ambient forcing field and the choice of its strength `C`.
//!
//! Along each normal ray of the target the field is `f(r, k) nu` with
//! `f(r, k) = -C r - k / (1 - k r)`. The second term cancels the curvature of
//! a parallel offset curve, so space-constant graphs decay like `e^{-C t}`.

use serde::Serialize;

use crate::chart::{AdmissibleChart, NormalCoords};
use crate::curve::{Frame, TargetCurve};
use crate::error::{Error, Result};
use crate::vec2::{self, Point};

/// `|1 - k r|` below which the forcing is treated as singular.
const BOUNDARY_EPS: f64 = 1e-12;

/// Forcing strength and the curve-dependent constants it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcingConfig {
    #[serde(rename = "C")]
    pub c: f64,
    /// Half-width of the band on which the gradient estimate is certified.
    pub eps0_eff: f64,
    /// Lower bound for `1 - k r` on that band.
    pub delta: f64,
    pub c3: f64,
    pub c4: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    /// `sup |k|`, `sup |k_u|`, `sup |k_uu|` over the nodes.
    pub k_sup: [f64; 3],
    pub overridden: bool,
}

impl ForcingConfig {
    /// The same certified constants with a different strength `C >= 1`.
    pub fn with_override(&self, c: f64) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(Error::InvalidOverride(c));
        }
        Ok(Self {
            c,
            overridden: true,
            ..*self
        })
    }
}

/// `f(r, k) = -C r - k / (1 - k r)`.
pub fn f_scalar(r: f64, k: f64, c: f64) -> Result<f64> {
    let denom = 1.0 - k * r;
    if denom.abs() < BOUNDARY_EPS {
        return Err(Error::ChartBoundary(denom));
    }
    Ok(-c * r - k / denom)
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Select `C = max{1, C0}` with `C0 = c3 eps0 + c4 + 1`.
///
/// With `K0 = sup|k|`, `K1 = sup|k_u|`, `K2 = sup|k_uu|` and the band
/// `|r| <= eps0_eff` on which `1 - k r >= delta`:
///
/// * `c4 = 2 K1 + 2 K0^2 + K0^2 / delta^2`
/// * `c3 = K2 / delta + 2 K1^2 eps0_eff + K1^2 eps0_eff / delta^2`
///
/// `eps0_eff` is half the smallest of the nominal band width and the finite
/// chart half-widths.
pub fn select_c(
    curve: &TargetCurve,
    chart: &AdmissibleChart,
    override_c: Option<f64>,
) -> Result<ForcingConfig> {
    let k0 = sup_abs(curve.k());
    let k1 = sup_abs(curve.k1());
    let k2 = sup_abs(curve.k2());

    let kmin = curve.kmin();
    let kmax = curve.kmax();
    let eps0_nominal = if kmin >= 0.0 {
        1.0 / kmax
    } else {
        (1.0 / kmin.abs()).max(1.0 / kmax)
    };
    let mut width = eps0_nominal.min(chart.r_hi());
    if chart.r_lo().is_finite() {
        width = width.min(chart.r_lo().abs());
    }
    let eps0_eff = 0.5 * width;
    let delta = 1.0 - (k0 * eps0_eff).max(kmin.abs() * eps0_eff);

    let d2 = delta * delta;
    let c4 = 2.0 * k1 + 2.0 * k0 * k0 + k0 * k0 / d2;
    let c3 = k2 / delta + 2.0 * k1 * k1 * eps0_eff + k1 * k1 * eps0_eff / d2;
    let c0 = c3 * eps0_eff + c4 + 1.0;

    let cfg = ForcingConfig {
        c: c0.max(1.0),
        eps0_eff,
        delta,
        c3,
        c4,
        c0,
        k_sup: [k0, k1, k2],
        overridden: false,
    };
    match override_c {
        Some(c) => cfg.with_override(c),
        None => Ok(cfg),
    }
}

/// Forcing vector at normal coordinates already known to lie in the chart.
pub fn field_at(chart: &AdmissibleChart, cfg: &ForcingConfig, at: NormalCoords) -> Point {
    field_in_frame(cfg, &chart.curve().frame_at(at.u), at.r)
}

/// Forcing vector at offset `r` along the normal of a precomputed frame.
pub fn field_in_frame(cfg: &ForcingConfig, frame: &Frame, r: f64) -> Point {
    match f_scalar(r, frame.k, cfg.c) {
        Ok(f) => vec2::scale(frame.normal, f),
        Err(_) => [0.0, 0.0],
    }
}

/// `V(p) = f(r, k(u)) nu(u)` inside the tubular neighbourhood, zero outside.
pub fn eval_v(chart: &AdmissibleChart, cfg: &ForcingConfig, p: Point) -> Point {
    match chart.project(p) {
        Some(at) => field_at(chart, cfg, at),
        None => [0.0, 0.0],
    }
}
