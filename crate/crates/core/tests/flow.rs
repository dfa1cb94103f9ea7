//! Graph solver and front-tracking oracle.

use std::f64::consts::TAU;
use std::sync::Arc;

use targetflow::{
    admissible_interval, ambient_run, build_target, hausdorff, select_c, AdmissibleChart,
    AmbientPolygon, CurveSpec, GraphFlow, SolverConfig, TimeStep,
};

fn flow(spec: CurveSpec, n: usize) -> GraphFlow {
    let chart = admissible_interval(Arc::new(build_target(&spec, n).unwrap())).unwrap();
    let cfg = select_c(chart.curve(), &chart, None).unwrap();
    GraphFlow::new(chart, cfg)
}

fn solver(dt: TimeStep, t_end: f64) -> SolverConfig {
    SolverConfig {
        dt,
        t_end,
        tol_stop: None,
        ..SolverConfig::default()
    }
}

fn sine(chart: &AdmissibleChart, amplitude: f64, mode: f64) -> Vec<f64> {
    let length = chart.curve().length();
    chart
        .curve()
        .u()
        .iter()
        .map(|u| amplitude * chart.r_hi() * (TAU * mode * u / length).sin())
        .collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_data_decays_exponentially_on_a_nonconvex_target() {
    let f = flow(CurveSpec::Bean, 256);
    let c = f.forcing().c;
    let dt = 1e-3;
    let r0 = vec![0.1; 256];
    let trace = f.run(&r0, &solver(TimeStep::Fixed(dt), 0.5)).unwrap();
    // one RK4 step multiplies r' = -C r by the degree-4 Taylor polynomial of exp(-C dt)
    let z = -c * dt;
    let gain = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
    for snap in &trace.snapshots {
        let steps = (snap.t / dt).round() as i32;
        let discrete = 0.1 * gain.powi(steps);
        let exact = 0.1 * (-c * snap.t).exp();
        assert!(
            snap.r.iter().all(|&r| r == snap.r[0]),
            "t = {}: not constant",
            snap.t
        );
        assert!(
            (snap.r[0] - discrete).abs() <= 1e-12 * discrete,
            "t = {}",
            snap.t
        );
        assert!((snap.r[0] - exact).abs() <= 1e-8 * exact, "t = {}", snap.t);
    }
}

#[test]
fn spectral_derivatives_have_zero_mean() {
    let f = flow(CurveSpec::Bean, 512);
    let r = sine(f.chart(), 0.3, 3.0);
    let r: Vec<f64> = r
        .iter()
        .zip(f.curve().k())
        .map(|(r, k)| r + 0.05 * k * k)
        .collect();
    for order in 1..=4 {
        let d = f.curve().derivative(&r, order);
        let scale = d.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!(
            mean.abs() <= 1e-10 * scale.max(1.0),
            "order {order}: {mean:e}"
        );
    }
}

#[test]
fn recorded_norms_are_sup_norms_of_derivatives() {
    let f = flow(CurveSpec::ellipse(2.0, 1.0), 256);
    let r = sine(f.chart(), 0.2, 2.0);
    let norms = f.derivative_norms(&r);
    for (m, &norm) in norms.iter().enumerate() {
        let d = if m == 0 {
            r.clone()
        } else {
            f.curve().derivative(&r, m)
        };
        let sup = d.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
        assert!((norm - sup).abs() <= 1e-12 * sup.max(1.0), "order {m}");
    }
}

#[test]
fn time_stepping_is_fourth_order() {
    let f = flow(CurveSpec::circle(1.0), 64);
    let r0 = sine(f.chart(), 0.3, 2.0);
    let end = |dt: f64| {
        f.run(&r0, &solver(TimeStep::Fixed(dt), 0.02))
            .unwrap()
            .snapshots
            .last()
            .unwrap()
            .r
            .clone()
    };
    // the stability bound at n = 64 is about 2e-3
    let (a, b, c) = (end(1e-3), end(5e-4), end(2.5e-4));
    let ratio = sup_diff(&a, &b) / sup_diff(&b, &c);
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

#[test]
fn grid_refinement_converges_spectrally() {
    let t_end = 0.05;
    // C is a sup over the nodes and shifts with n, so it is pinned here
    let solve = |n: usize| {
        let g = flow(CurveSpec::Bean, n);
        let f = GraphFlow::new(g.chart().clone(), g.forcing().with_override(13.2).unwrap());
        let length = f.curve().length();
        let r0: Vec<f64> = f
            .curve()
            .u()
            .iter()
            .map(|u| 0.4 * (2.0 * TAU * u / length).sin())
            .collect();
        f.run(&r0, &solver(TimeStep::Fixed(2e-4), t_end))
            .unwrap()
            .snapshots
            .last()
            .unwrap()
            .r
            .clone()
    };
    let (r128, r256, r512) = (solve(128), solve(256), solve(512));
    let coarse: Vec<f64> = (0..128).map(|i| r512[4 * i]).collect();
    let mid: Vec<f64> = (0..256).map(|i| r512[2 * i]).collect();
    let (e128, e256) = (sup_diff(&r128, &coarse), sup_diff(&r256, &mid));
    assert!(e256 < 1e-7, "{e256:e}");
    assert!(e128 > 10.0 * e256, "{e128:e} vs {e256:e}");
}

#[test]
fn solver_rejects_data_outside_the_chart() {
    let f = flow(CurveSpec::circle(1.0), 64);
    assert!(f.run(&[1.5; 64], &SolverConfig::default()).is_err());
    assert!(f.run(&[0.1; 63], &SolverConfig::default()).is_err());
    assert!(f
        .run(&[0.1; 64], &solver(TimeStep::Fixed(-1.0), 1.0))
        .is_err());
}

#[test]
fn target_is_stationary_for_the_ambient_oracle() {
    // the polygon's curvature differs from the exact one by O(h^2), so the
    // drift away from the target shrinks at least quadratically
    let drift = |n: usize| {
        let f = flow(CurveSpec::Bean, n);
        let start = AmbientPolygon::from_graph(f.chart(), &vec![0.0; n]);
        let end = ambient_run(&start, f.chart(), f.forcing(), 1e-5, 2e-3).unwrap();
        hausdorff(&end.points, &start.points)
    };
    let (coarse, fine) = (drift(256), drift(512));
    assert!(coarse < 1e-4, "{coarse:e}");
    let ratio = coarse / fine;
    assert!(ratio > 3.0, "{coarse:e} / {fine:e}");
}

#[test]
fn ambient_oracle_shrinks_a_constant_offset_circle() {
    let f = flow(CurveSpec::circle(1.0), 256);
    let c = f.forcing().c;
    let start = AmbientPolygon::from_graph(f.chart(), &[0.2; 256]);
    let t = 0.05;
    let end = ambient_run(&start, f.chart(), f.forcing(), 1e-5, t).unwrap();
    let radius = 1.0 - 0.2 * (-c * t).exp();
    let worst = end
        .points
        .iter()
        .map(|p| (p[0].hypot(p[1]) - radius).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst:e}");
}
