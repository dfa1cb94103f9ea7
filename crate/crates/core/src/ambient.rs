//! Front-tracking oracle: a closed polygon moved directly by
//! `gamma_t = kappa + V(gamma)` with forward Euler steps and arclength
//! redistribution. It shares no code with the graph solver beyond the
//! forcing field, and serves as an independent cross-check.

use crate::chart::AdmissibleChart;
use crate::error::{Error, Result};
use crate::forcing::{field_in_frame, ForcingConfig};
use crate::polygon;
use crate::vec2::{self, Point};

/// Minimum vertex count of an ambient polygon.
pub const MIN_VERTICES: usize = 8;
/// Shortest admissible polygon edge.
const MIN_SEGMENT: f64 = 1e-12;
/// Simplicity is re-verified every this many steps of [`ambient_run`].
const SIMPLICITY_STRIDE: usize = 200;

/// Closed counterclockwise polygon at time `t`.
///
/// `hints` carries each vertex's last known foot-point arclength on the
/// target; it only seeds projections and never changes the evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPolygon {
    pub t: f64,
    pub points: Vec<Point>,
    hints: Vec<f64>,
}

impl AmbientPolygon {
    /// Polygon without projection hints; the first step scans the target.
    pub fn new(points: Vec<Point>) -> Self {
        let hints = vec![f64::NAN; points.len()];
        Self {
            t: 0.0,
            points,
            hints,
        }
    }

    /// The curve generated by nodal graph values `r`, one vertex per node.
    pub fn from_graph(chart: &AdmissibleChart, r: &[f64]) -> Self {
        Self {
            t: 0.0,
            points: chart.generated_curve(r),
            hints: chart.curve().u().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Discrete curvature vector at each vertex: the second difference of
/// position with respect to arclength,
/// `2 / (h_- + h_+) * ((x_+ - x) / h_+ - (x - x_-) / h_-)`.
pub fn polygon_curvature(points: &[Point]) -> Result<Vec<Point>> {
    let m = points.len();
    if m < MIN_VERTICES {
        return Err(Error::Validation {
            field: "polygon".into(),
            message: format!("needs at least {MIN_VERTICES} vertices, got {m}"),
        });
    }
    let seg: Vec<f64> = (0..m)
        .map(|i| vec2::dist(points[i], points[(i + 1) % m]))
        .collect();
    if let Some(i) = seg.iter().position(|&h| h < MIN_SEGMENT) {
        return Err(Error::DegenerateSegment(i));
    }
    Ok((0..m)
        .map(|i| {
            let prev = points[(i + m - 1) % m];
            let next = points[(i + 1) % m];
            let (hm, hp) = (seg[(i + m - 1) % m], seg[i]);
            let fwd = vec2::scale(vec2::sub(next, points[i]), 1.0 / hp);
            let bwd = vec2::scale(vec2::sub(points[i], prev), 1.0 / hm);
            vec2::scale(vec2::sub(fwd, bwd), 2.0 / (hm + hp))
        })
        .collect())
}

/// Forward-Euler step followed by redistribution to uniform arclength.
pub fn ambient_step(
    poly: &AmbientPolygon,
    chart: &AdmissibleChart,
    cfg: &ForcingConfig,
    dt: f64,
) -> Result<AmbientPolygon> {
    let kappa = polygon_curvature(&poly.points)?;
    let mut moved = Vec::with_capacity(poly.len());
    let mut feet = Vec::with_capacity(poly.len());
    for (i, (&p, &hint)) in poly.points.iter().zip(&poly.hints).enumerate() {
        let (at, frame) = if hint.is_finite() {
            chart.project_near_frame(p, hint)
        } else {
            chart.project_frame(p)
        }
        .ok_or(Error::LeftChart {
            vertex: i,
            t: poly.t,
        })?;
        let w = vec2::add(kappa[i], field_in_frame(cfg, &frame, at.r));
        moved.push(vec2::add(p, vec2::scale(w, dt)));
        // first-order motion of the foot point seeds the next projection
        feet.push(at.u + dt * vec2::dot(w, frame.tangent) / (1.0 - frame.k * at.r));
    }
    let (points, hints) = redistribute(&moved, &feet, chart.curve().length());
    Ok(AmbientPolygon {
        t: poly.t + dt,
        points,
        hints,
    })
}

/// Run [`ambient_step`] with step `dt` until `t_end` (the last step is
/// shortened to land on it).
pub fn ambient_run(
    poly: &AmbientPolygon,
    chart: &AdmissibleChart,
    cfg: &ForcingConfig,
    dt: f64,
    t_end: f64,
) -> Result<AmbientPolygon> {
    let steps = (((t_end - poly.t) / dt) * (1.0 - 1e-12)).ceil().max(0.0) as usize;
    let mut cur = poly.clone();
    for s in 0..steps {
        let h = if s + 1 == steps { t_end - cur.t } else { dt };
        cur = ambient_step(&cur, chart, cfg, h)?;
        if (s + 1) % SIMPLICITY_STRIDE == 0 || s + 1 == steps {
            if let Some((a, b)) = polygon::first_self_intersection(&cur.points) {
                return Err(Error::PolygonNotSimple(a, b));
            }
        }
    }
    Ok(cur)
}

/// Resample a closed polygon to the same number of vertices, equally spaced
/// in chord length, keeping vertex 0 fixed. Coordinates (and the unwrapped
/// foot-point arclengths) are interpolated by local four-point cubics.
fn redistribute(points: &[Point], feet: &[f64], period: f64) -> (Vec<Point>, Vec<f64>) {
    let m = points.len();
    let mut s = Vec::with_capacity(m + 1);
    s.push(0.0);
    for i in 0..m {
        s.push(s[i] + vec2::dist(points[i], points[(i + 1) % m]));
    }
    let total = s[m];

    let mut unwrapped = Vec::with_capacity(m);
    unwrapped.push(feet[0]);
    for i in 1..m {
        let jump = (feet[i] - feet[i - 1] + 0.5 * period).rem_euclid(period) - 0.5 * period;
        unwrapped.push(unwrapped[i - 1] + jump);
    }
    // closing jump, so the foot coordinate advances by exactly one period
    let wrap = unwrapped[m - 1]
        + ((feet[0] - feet[m - 1] + 0.5 * period).rem_euclid(period) - 0.5 * period)
        - unwrapped[0];

    // (s, x, y, foot) at indices -1..=m+1, extended periodically
    let ext: Vec<[f64; 4]> = (-1..=m as isize + 1)
        .map(|j| {
            let k = j.rem_euclid(m as isize) as usize;
            let cycles = j.div_euclid(m as isize) as f64;
            [
                s[k] + cycles * total,
                points[k][0],
                points[k][1],
                unwrapped[k] + cycles * wrap,
            ]
        })
        .collect();

    let mut out = Vec::with_capacity(m);
    let mut out_feet = Vec::with_capacity(m);
    let mut seg = 0usize;
    for j in 0..m {
        let target = j as f64 * total / m as f64;
        while seg + 1 < m && s[seg + 1] <= target {
            seg += 1;
        }
        // nodes seg-1..=seg+2 sit at ext[seg..seg+4]
        let nodes = &ext[seg..seg + 4];
        let mut acc = [0.0; 3];
        for (a, na) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, nb) in nodes.iter().enumerate() {
                if a != b {
                    w *= (target - nb[0]) / (na[0] - nb[0]);
                }
            }
            acc[0] += w * na[1];
            acc[1] += w * na[2];
            acc[2] += w * na[3];
        }
        out.push([acc[0], acc[1]]);
        out_feet.push(acc[2].rem_euclid(period));
    }
    (out, out_feet)
}

/// Symmetric Hausdorff distance between two closed polygons, measured from
/// each vertex to the other polygon's edges.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let one_sided = |from: &[Point], to: &[Point]| {
        from.iter()
            .map(|&p| polygon::point_polygon_distance(p, to))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(r: f64, m: usize, shift: Point) -> Vec<Point> {
        (0..m)
            .map(|i| {
                let t = TAU * i as f64 / m as f64;
                [shift[0] + r * t.cos(), shift[1] + r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn regular_polygon_curvature_is_inverse_radius() {
        let k = polygon_curvature(&circle(1.0, 512, [0.0, 0.0])).unwrap();
        assert!(k.iter().all(|v| (vec2::norm(*v) - 1.0).abs() < 1e-4));
        // points inward
        assert!(k[0][0] < 0.0);
    }

    #[test]
    fn collinear_vertex_has_zero_curvature() {
        let mut pts = circle(1.0, 16, [0.0, 0.0]);
        pts[1] = [0.5 * (pts[0][0] + pts[2][0]), 0.5 * (pts[0][1] + pts[2][1])];
        let k = polygon_curvature(&pts).unwrap();
        assert!(vec2::norm(k[1]) < 1e-12);
    }

    #[test]
    fn degenerate_segment_is_reported() {
        let mut pts = circle(1.0, 16, [0.0, 0.0]);
        pts[4] = pts[3];
        assert_eq!(
            polygon_curvature(&pts).unwrap_err(),
            Error::DegenerateSegment(3)
        );
    }

    #[test]
    fn hausdorff_of_simple_configurations() {
        let a = circle(1.0, 4096, [0.0, 0.0]);
        assert_eq!(hausdorff(&a, &a), 0.0);
        let b = circle(1.1, 4096, [0.0, 0.0]);
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-6);
        let c = circle(1.0, 4096, [0.05, 0.0]);
        assert!((hausdorff(&a, &c) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn redistribution_equalizes_spacing_and_keeps_shape() {
        let m = 256;
        let pts: Vec<Point> = (0..m)
            .map(|i| {
                let t = TAU * (i as f64 / m as f64).powf(1.3);
                [t.cos(), t.sin()]
            })
            .collect();
        let feet = vec![0.0; m];
        let (out, _) = redistribute(&pts, &feet, TAU);
        let seg: Vec<f64> = (0..m)
            .map(|i| vec2::dist(out[i], out[(i + 1) % m]))
            .collect();
        let (lo, hi) = seg
            .iter()
            .fold((f64::MAX, 0.0_f64), |(a, b), &s| (a.min(s), b.max(s)));
        assert!(hi / lo < 1.01, "{lo} {hi}");
        assert!(out.iter().all(|p| (vec2::norm(*p) - 1.0).abs() < 1e-5));
    }
}
