//! Writers for traces (CSV, JSON) and figures (SVG).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::analysis::FlowTrace;
use crate::chart::{AdmissibleChart, NormalCoords};
use crate::error::Result;
use crate::forcing::{field_at, ForcingConfig};
use crate::vec2::{self, Point};

/// Stations along the target in the vector-field lattice.
pub const FIELD_STATIONS: usize = 24;
/// Normal offsets per station; the middle one is the target itself.
pub const FIELD_OFFSETS: usize = 9;
/// Longest drawn arrow as a fraction of the bounding-box diagonal.
pub const ARROW_CLAMP: f64 = 0.05;
/// Outermost lattice offsets sit at this fraction of the inner chart ends,
/// where projection still recovers them.
const LATTICE_REACH: f64 = 0.99;

const STROKE: &str = "#1f4e79";
const CLAMPED_STROKE: &str = "#c0392b";

pub(crate) fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    Ok(())
}

/// 17 significant digits, enough to reproduce every `f64` exactly.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// The norms table as written to `<path>.norms.csv`.
pub fn norms_csv(trace: &FlowTrace) -> String {
    let mut out = String::from("t,sup_r,sup_r1,sup_r2,sup_r3,sup_r4\n");
    for (i, &t) in trace.times.iter().enumerate() {
        out.push_str(&num(t));
        for series in &trace.norms {
            out.push(',');
            out.push_str(&num(series[i]));
        }
        out.push('\n');
    }
    out
}

/// The snapshots in long format as written to `<path>.snapshots.csv`.
pub fn snapshots_csv(trace: &FlowTrace) -> String {
    let mut out = String::from("t,u,r\n");
    for snap in &trace.snapshots {
        let h = trace.meta.length / snap.r.len() as f64;
        for (i, &r) in snap.r.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", num(snap.t), num(i as f64 * h), num(r));
        }
    }
    out
}

/// Write `<path>.norms.csv` and `<path>.snapshots.csv`.
pub fn emit_csv(trace: &FlowTrace, path: &Path) -> Result<()> {
    write(&with_suffix(path, ".norms.csv"), &norms_csv(trace))?;
    write(&with_suffix(path, ".snapshots.csv"), &snapshots_csv(trace))
}

/// Write the full trace to `<path>.trace.json`.
pub fn emit_trace_json(trace: &FlowTrace, path: &Path) -> Result<()> {
    let doc = json!({
        "meta": trace.meta,
        "times": trace.times,
        "norms": trace.norms,
        "snapshots": trace.snapshots.iter().map(|s| json!({"t": s.t, "r": s.r})).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| crate::Error::Io(e.to_string()))?;
    write(&with_suffix(path, ".trace.json"), &(text + "\n"))
}

/// One sample of the forcing field in the figure lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldArrow {
    pub at: NormalCoords,
    pub base: Point,
    /// Field vector times the arrow scale, before clamping.
    pub vector: Point,
    pub clamped: bool,
}

/// Normal offsets of the lattice: four evenly spaced on each side of the
/// target, reaching just inside the ends of the margin-shrunk chart. Convex
/// targets use the mirror image of the inner end on the outside.
pub fn lattice_offsets(chart: &AdmissibleChart) -> [f64; FIELD_OFFSETS] {
    let hi = LATTICE_REACH * chart.inner_hi();
    let lo = if chart.inner_lo().is_finite() {
        LATTICE_REACH * chart.inner_lo()
    } else {
        -hi
    };
    let half = (FIELD_OFFSETS / 2) as f64;
    std::array::from_fn(|j| {
        let s = j as f64 - half;
        if s < 0.0 {
            -lo * s / half
        } else {
            hi * s / half
        }
    })
}

/// Sample the forcing field on the lattice. Stations sit at
/// `u_j = (j + phase) L / 24`.
pub fn field_lattice(
    chart: &AdmissibleChart,
    cfg: &ForcingConfig,
    arrow_scale: f64,
    phase: f64,
) -> (Vec<FieldArrow>, f64) {
    let curve = chart.curve();
    let length = curve.length();
    let offsets = lattice_offsets(chart);
    let mut arrows = Vec::with_capacity(FIELD_STATIONS * FIELD_OFFSETS);
    for j in 0..FIELD_STATIONS {
        let u = ((j as f64 + phase) * length / FIELD_STATIONS as f64).rem_euclid(length);
        let frame = curve.frame_at(u);
        for &r in &offsets {
            let at = NormalCoords { u, r };
            arrows.push(FieldArrow {
                at,
                base: vec2::add(frame.position, vec2::scale(frame.normal, r)),
                vector: vec2::scale(field_at(chart, cfg, at), arrow_scale),
                clamped: false,
            });
        }
    }
    let (lo, hi) = bounds(
        curve
            .position()
            .iter()
            .chain(arrows.iter().map(|a| &a.base)),
    );
    let limit = ARROW_CLAMP * vec2::dist(lo, hi);
    for a in &mut arrows {
        a.clamped = vec2::norm(a.vector) > limit;
    }
    (arrows, limit)
}

fn bounds<'a>(pts: impl Iterator<Item = &'a Point>) -> (Point, Point) {
    pts.fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1])],
                [hi[0].max(p[0]), hi[1].max(p[1])],
            )
        },
    )
}

fn svg_open(out: &mut String, lo: Point, hi: Point, pad: f64) {
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        lo[0] - pad,
        -hi[1] - pad,
        w,
        h,
        (800.0 * h / w).round()
    );
}

fn closed_path(points: &[Point]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, p[0], -p[1]);
    }
    d.push('Z');
    d
}

/// SVG document of the target curve and the forcing field lattice. Arrows
/// longer than [`ARROW_CLAMP`] of the bounding-box diagonal are shortened
/// to that length and drawn in a distinct colour.
pub fn svg_field_document(
    chart: &AdmissibleChart,
    cfg: &ForcingConfig,
    arrow_scale: f64,
    phase: f64,
) -> String {
    let (arrows, limit) = field_lattice(chart, cfg, arrow_scale, phase);
    let curve = chart.curve();
    let (lo, hi) = bounds(
        curve
            .position()
            .iter()
            .chain(arrows.iter().map(|a| &a.base)),
    );
    let pad = 1.5 * limit;
    let width = 0.004 * vec2::dist(lo, hi);

    let mut out = String::new();
    svg_open(&mut out, lo, hi, pad);
    let _ = writeln!(
        out,
        r#"<title>forcing field on {} (C = {}, arrows scaled by {})</title>"#,
        curve.spec().name(),
        cfg.c,
        arrow_scale
    );
    let _ = writeln!(out, "<defs>");
    for (id, color) in [("head", STROKE), ("head-clamped", CLAMPED_STROKE)] {
        let _ = writeln!(
            out,
            r#"<marker id="{id}" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="4" markerHeight="4" orient="auto"><path d="M0 0 L10 5 L0 10 Z" fill="{color}"/></marker>"#
        );
    }
    let _ = writeln!(out, "</defs>");
    let _ = writeln!(
        out,
        r##"<path id="target" d="{}" fill="none" stroke="#222" stroke-width="{}"/>"##,
        closed_path(curve.position()),
        1.5 * width
    );
    let _ = writeln!(out, r#"<g id="field" stroke-width="{width}">"#);
    for a in &arrows {
        let len = vec2::norm(a.vector);
        let v = if a.clamped {
            vec2::scale(a.vector, limit / len)
        } else {
            a.vector
        };
        let tip = vec2::add(a.base, v);
        let (class, stroke, head) = if a.clamped {
            ("arrow clamped", CLAMPED_STROKE, "head-clamped")
        } else {
            ("arrow", STROKE, "head")
        };
        let _ = writeln!(
            out,
            r#"<line class="{class}" data-u="{}" data-r="{}" data-length="{len}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" marker-end="url(#{head})"/>"#,
            a.at.u, a.at.r, a.base[0], -a.base[1], tip[0], -tip[1],
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}

pub fn emit_svg_field(
    chart: &AdmissibleChart,
    cfg: &ForcingConfig,
    path: &Path,
    arrow_scale: f64,
) -> Result<()> {
    write(path, &svg_field_document(chart, cfg, arrow_scale, 0.0))
}

/// Frames kept in an evolution figure.
const EVOLUTION_FRAMES: usize = 12;

/// SVG document of the target (dashed) and the generated curves of up to
/// twelve snapshots, fading from light to dark with time.
pub fn svg_evolution_document(chart: &AdmissibleChart, trace: &FlowTrace) -> String {
    let snaps = &trace.snapshots;
    let picked: Vec<usize> = if snaps.len() <= EVOLUTION_FRAMES {
        (0..snaps.len()).collect()
    } else {
        let mut idx: Vec<usize> = (0..EVOLUTION_FRAMES)
            .map(|k| k * (snaps.len() - 1) / (EVOLUTION_FRAMES - 1))
            .collect();
        idx.dedup();
        idx
    };
    let curves: Vec<Vec<Point>> = picked
        .iter()
        .map(|&i| chart.generated_curve(&snaps[i].r))
        .collect();
    let target = chart.curve().position();
    let (lo, hi) = bounds(target.iter().chain(curves.iter().flatten()));
    let diag = vec2::dist(lo, hi);

    let mut out = String::new();
    svg_open(&mut out, lo, hi, 0.05 * diag);
    let _ = writeln!(
        out,
        "<title>evolution towards {} (C = {})</title>",
        trace.meta.curve, trace.meta.c
    );
    let _ = writeln!(
        out,
        r##"<path id="target" d="{}" fill="none" stroke="#888" stroke-dasharray="{} {}" stroke-width="{}"/>"##,
        closed_path(target),
        0.01 * diag,
        0.006 * diag,
        0.003 * diag
    );
    let last = curves.len().saturating_sub(1).max(1) as f64;
    for (k, (pts, &i)) in curves.iter().zip(&picked).enumerate() {
        let shade = 0.25 + 0.75 * k as f64 / last;
        let _ = writeln!(
            out,
            r#"<path class="frame" data-t="{}" d="{}" fill="none" stroke="rgb(31,78,121)" stroke-opacity="{shade:.3}" stroke-width="{}"/>"#,
            snaps[i].t,
            closed_path(pts),
            0.004 * diag
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

pub fn emit_svg_evolution(chart: &AdmissibleChart, trace: &FlowTrace, path: &Path) -> Result<()> {
    write(path, &svg_evolution_document(chart, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TraceMeta;

    fn tiny_trace(times: &[f64]) -> FlowTrace {
        let mut tr = FlowTrace::new(TraceMeta {
            curve: "circle".into(),
            c: 7.0,
            n: 4,
            dt: 0.1,
            t_end: 1.0,
            length: 4.0,
        });
        for &t in times {
            tr.push(t, [t, 0.1, 1.0 / 3.0, 0.0, 1e-300], None);
        }
        tr
    }

    #[test]
    fn norms_csv_has_one_row_per_time() {
        let csv = norms_csv(&tiny_trace(&[0.0, 0.5, 1.0]));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,sup_r,sup_r1,sup_r2,sup_r3,sup_r4\n"));
        assert!(!csv.contains('\r'));
        let third: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(third.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn empty_snapshots_give_header_only() {
        assert_eq!(snapshots_csv(&tiny_trace(&[0.0])), "t,u,r\n");
    }

    #[test]
    fn snapshot_rows_carry_node_arclength() {
        let mut tr = tiny_trace(&[]);
        tr.push(0.0, [0.0; 5], Some(vec![0.1, 0.2, 0.3, 0.4]));
        let csv = snapshots_csv(&tr);
        let row: Vec<f64> = csv
            .lines()
            .nth(3)
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.0, 2.0, 0.3]);
    }
}
