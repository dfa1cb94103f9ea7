//! Closed-polygon utilities: orientation, simplicity sweep, point-segment distance.

use std::cmp::Ordering;

use crate::vec2::{self, Point};

/// Shoelace signed area; positive for counterclockwise vertex order.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    vec2::cross(vec2::sub(b, a), vec2::sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// First pair of non-adjacent edges of the closed polygon that intersect.
///
/// Edges are swept in order of their left endpoint; an edge is compared only
/// against active edges whose x-extent still overlaps it.
pub fn first_self_intersection(points: &[Point]) -> Option<(usize, usize)> {
    let n = points.len();
    if n < 4 {
        return None;
    }
    let edge = |i: usize| (points[i], points[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |i: usize| {
        let (a, b) = edge(i);
        a[0].min(b[0])
    };
    let max_x = |i: usize| {
        let (a, b) = edge(i);
        a[0].max(b[0])
    };
    order.sort_by(|&i, &j| min_x(i).partial_cmp(&min_x(j)).unwrap_or(Ordering::Equal));

    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let x = min_x(i);
        active.retain(|&j| max_x(j) >= x);
        let (a, b) = edge(i);
        let (ylo, yhi) = (a[1].min(b[1]), a[1].max(b[1]));
        for &j in &active {
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            let (c, d) = edge(j);
            if c[1].max(d[1]) < ylo || c[1].min(d[1]) > yhi {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i.min(j), i.max(j)));
            }
        }
        active.push(i);
    }
    None
}

pub fn is_simple(points: &[Point]) -> bool {
    first_self_intersection(points).is_none()
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = vec2::sub(b, a);
    let len2 = vec2::dot(ab, ab);
    if len2 == 0.0 {
        return vec2::dist(p, a);
    }
    let t = (vec2::dot(vec2::sub(p, a), ab) / len2).clamp(0.0, 1.0);
    vec2::dist(p, vec2::add(a, vec2::scale(ab, t)))
}

/// Distance from `p` to the closed polygon through `points`.
pub fn point_polygon_distance(p: Point, points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| point_segment_distance(p, points[i], points[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}
