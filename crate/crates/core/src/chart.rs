//! Normal coordinates `(u, r) -> eta(u) + r nu(u)` on the tubular
//! neighbourhood of a target curve.

use std::sync::Arc;

use serde::Serialize;

use crate::curve::{Frame, TargetCurve};
use crate::error::{Error, Result};
use crate::polygon;
use crate::vec2::{self, Point};

/// Fraction of the curvature-limited interval that is treated as the chart.
pub const EMBEDDING_MARGIN: f64 = 0.99;
/// Offset curves checked for simplicity per finite end of the interval.
const OFFSET_SAMPLES: usize = 8;
const NEWTON_STEPS: usize = 20;
/// Newton stops once its step is below this fraction of the node spacing;
/// the error left in `u` is of the order of the step squared.
const STEP_TOL: f64 = 1e-9;

/// Normal coordinates of an ambient point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalCoords {
    pub u: f64,
    pub r: f64,
}

/// The admissible interval `(r_lo, r_hi)` together with its curve.
///
/// `r_lo` is `-inf` for convex curves.
#[derive(Debug, Clone)]
pub struct AdmissibleChart {
    curve: Arc<TargetCurve>,
    r_lo: f64,
    r_hi: f64,
    embedding_margin: f64,
}

/// Compute the admissible interval of `curve` and verify that offset curves
/// across the margin-shrunk interval stay embedded.
pub fn admissible_interval(curve: Arc<TargetCurve>) -> Result<AdmissibleChart> {
    let r_hi = 1.0 / curve.kmax();
    let r_lo = if curve.kmin() >= 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 / curve.kmin()
    };
    let chart = AdmissibleChart {
        curve,
        r_lo,
        r_hi,
        embedding_margin: EMBEDDING_MARGIN,
    };
    for end in [r_lo, r_hi].into_iter().filter(|e| e.is_finite()) {
        for j in 1..=OFFSET_SAMPLES {
            let r = chart.embedding_margin * end * j as f64 / OFFSET_SAMPLES as f64;
            if !polygon::is_simple(&chart.offset_curve(r)) {
                return Err(Error::TubularDegenerate(r));
            }
        }
    }
    Ok(chart)
}

impl AdmissibleChart {
    pub fn curve(&self) -> &TargetCurve {
        &self.curve
    }

    pub fn curve_arc(&self) -> Arc<TargetCurve> {
        Arc::clone(&self.curve)
    }

    pub fn r_lo(&self) -> f64 {
        self.r_lo
    }

    pub fn r_hi(&self) -> f64 {
        self.r_hi
    }

    pub fn embedding_margin(&self) -> f64 {
        self.embedding_margin
    }

    /// Lower end of the margin-shrunk chart.
    pub fn inner_lo(&self) -> f64 {
        self.embedding_margin * self.r_lo
    }

    /// Upper end of the margin-shrunk chart.
    pub fn inner_hi(&self) -> f64 {
        self.embedding_margin * self.r_hi
    }

    /// Whether `r` lies in the open admissible interval.
    pub fn admits(&self, r: f64) -> bool {
        r > self.r_lo && r < self.r_hi
    }

    /// Node polygon of the offset curve `eta + r nu`.
    pub fn offset_curve(&self, r: f64) -> Vec<Point> {
        self.curve
            .position()
            .iter()
            .zip(self.curve.normal())
            .map(|(&p, &nu)| vec2::add(p, vec2::scale(nu, r)))
            .collect()
    }

    /// The curve generated by nodal graph values `r`.
    pub fn generated_curve(&self, r: &[f64]) -> Vec<Point> {
        self.curve
            .position()
            .iter()
            .zip(self.curve.normal())
            .zip(r)
            .map(|((&p, &nu), &ri)| vec2::add(p, vec2::scale(nu, ri)))
            .collect()
    }

    pub fn to_ambient(&self, u: f64, r: f64) -> Result<Point> {
        if !self.admits(r) {
            return Err(Error::OutsideChart {
                r,
                lo: self.r_lo,
                hi: self.r_hi,
            });
        }
        let f = self.curve.frame_at(u);
        Ok(vec2::add(f.position, vec2::scale(f.normal, r)))
    }

    /// Normal coordinates of `p`, or `None` when `p` is outside the
    /// margin-shrunk tubular neighbourhood.
    ///
    /// Starts from the nearest node and refines the foot point by Newton's
    /// method on `(p - eta(u)) . eta_u(u) = 0`.
    pub fn project(&self, p: Point) -> Option<NormalCoords> {
        self.project_frame(p).map(|(c, _)| c)
    }

    /// Like [`project`](Self::project) but starts Newton from `u_hint`,
    /// falling back to the full nearest-node scan if the iteration fails or
    /// wanders more than a few node spacings away from the hint.
    pub fn project_near(&self, p: Point, u_hint: f64) -> Option<NormalCoords> {
        self.project_near_frame(p, u_hint).map(|(c, _)| c)
    }

    /// [`project`](Self::project) together with the target frame at the foot point.
    pub fn project_frame(&self, p: Point) -> Option<(NormalCoords, Frame)> {
        let nodes = self.curve.position();
        let i0 = (0..nodes.len())
            .min_by(|&a, &b| {
                let da = vec2::dist(p, nodes[a]);
                let db = vec2::dist(p, nodes[b]);
                da.total_cmp(&db)
            })
            .unwrap();
        let found = self.newton_foot(p, self.curve.u()[i0])?;
        self.accept(found)
    }

    /// [`project_near`](Self::project_near) together with the target frame
    /// at the foot point.
    pub fn project_near_frame(&self, p: Point, u_hint: f64) -> Option<(NormalCoords, Frame)> {
        let h = self.curve.spacing();
        let length = self.curve.length();
        if let Some(found) = self.newton_foot(p, u_hint) {
            let jump = (found.0.u - u_hint + 0.5 * length).rem_euclid(length) - 0.5 * length;
            if jump.abs() <= 4.0 * h {
                return self.accept(found);
            }
        }
        self.project_frame(p)
    }

    fn accept(&self, found: (NormalCoords, Frame)) -> Option<(NormalCoords, Frame)> {
        let r = found.0.r;
        if r > self.inner_lo() && r < self.inner_hi() {
            Some(found)
        } else {
            None
        }
    }

    /// Newton iteration for the foot point. The returned frame is the one of
    /// the last iterate; the final correction is below the tolerance, and
    /// `r` is stationary in `u` at the foot point.
    fn newton_foot(&self, p: Point, u0: f64) -> Option<(NormalCoords, Frame)> {
        let length = self.curve.length();
        let clamp = 0.5 * self.curve.spacing();
        let tol = STEP_TOL * self.curve.spacing();
        let mut u = u0;
        for _ in 0..NEWTON_STEPS {
            let f = self.curve.frame_at(u);
            let d = vec2::sub(p, f.position);
            let g = vec2::dot(d, f.velocity);
            let dg = vec2::dot(d, f.acceleration) - vec2::dot(f.velocity, f.velocity);
            if dg >= 0.0 {
                // not a local minimum of the distance; give up on this start
                return None;
            }
            let step = (g / dg).clamp(-clamp, clamp);
            u -= step;
            // near the focal set a small dg turns interpolation noise in g
            // into steps well above the step tolerance
            if step.abs() <= tol || g.abs() <= 1e-13 * length * vec2::norm(f.velocity) {
                let r = vec2::dot(d, f.normal);
                return Some((
                    NormalCoords {
                        u: u.rem_euclid(length),
                        r,
                    },
                    f,
                ));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_target, CurveSpec};

    fn chart(spec: CurveSpec, n: usize) -> AdmissibleChart {
        admissible_interval(Arc::new(build_target(&spec, n).unwrap())).unwrap()
    }

    #[test]
    fn convex_interval_is_unbounded_below() {
        let c = chart(CurveSpec::circle(1.0), 128);
        assert_eq!(c.r_lo(), f64::NEG_INFINITY);
        assert!((c.r_hi() - 1.0).abs() < 1e-10);
        let e = chart(CurveSpec::ellipse(2.0, 1.0), 512);
        assert_eq!(e.r_lo(), f64::NEG_INFINITY);
        assert!((e.r_hi() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn circle_to_ambient_and_back() {
        let c = chart(CurveSpec::circle(1.0), 128);
        let p = c.to_ambient(0.0, 0.5).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && p[1].abs() < 1e-12);
        let q = c.project([0.5, 0.0]).unwrap();
        assert!(q.u.min(2.0 * std::f64::consts::PI - q.u) < 1e-10);
        assert!((q.r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn to_ambient_rejects_offsets_outside_interval() {
        let c = chart(CurveSpec::circle(1.0), 64);
        assert!(matches!(
            c.to_ambient(0.3, 1.0),
            Err(Error::OutsideChart { .. })
        ));
        assert!(c.to_ambient(0.3, -50.0).is_ok());
    }

    #[test]
    fn points_beyond_margin_are_outside() {
        let c = chart(CurveSpec::circle(1.0), 128);
        assert!(c.project([0.001, 0.0]).is_none());
        assert!(c.project([0.0, 0.0]).is_none());
        assert!(c.project([-4.0, 3.0]).is_some());
    }

    #[test]
    fn warm_start_agrees_with_full_scan() {
        let c = chart(CurveSpec::Bean, 256);
        let p = c.to_ambient(12.3, 0.4).unwrap();
        let a = c.project(p).unwrap();
        let b = c.project_near(p, 12.0).unwrap();
        assert!((a.u - b.u).abs() < 1e-10 && (a.r - b.r).abs() < 1e-12);
        // a bad hint falls back to the scan
        let d = c.project_near(p, 30.0).unwrap();
        assert!((a.u - d.u).abs() < 1e-10);
    }
}
