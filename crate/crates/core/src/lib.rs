//! Numerical laboratory for a forced curve-shortening flow that drives a
//! normal-graphical curve onto a fixed embedded target curve.
//!
//! The crate is organised bottom-up:
//!
//! * [`curve`]: target curves on uniform arclength grids with spectral
//!   curvature profiles;
//! * [`chart`]: the admissible interval and normal coordinates of the
//!   tubular neighbourhood;
//! * [`forcing`]: the ambient forcing field and the choice of its strength;
//! * [`flow`]: the graph PDE solver;
//! * [`ambient`]: an independent front-tracking solver of the same flow;
//! * [`analysis`]: envelope checks and decay fits on flow traces;
//! * [`io`]: configuration files, batch driver, CSV/JSON/SVG output.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod analysis;
pub mod chart;
pub mod curve;
pub mod error;
pub mod flow;
pub mod forcing;
pub mod io;
pub mod polygon;
pub mod spectral;
pub mod vec2;

pub use ambient::{ambient_run, ambient_step, hausdorff, polygon_curvature, AmbientPolygon};
pub use analysis::{
    barrier_check, fit_decay_rate, gradient_envelope_check, higher_derivative_decay,
    second_derivative_envelope_check, t_epsilon, CheckOutcome, DecayFit, FlowTrace,
};
pub use chart::{admissible_interval, AdmissibleChart, NormalCoords};
pub use curve::{build_target, curvature_profile, CurveSpec, TargetCurve};
pub use error::{Error, Result};
pub use flow::{GraphFlow, GraphState, SolverConfig, TimeStep};
pub use forcing::{eval_v, f_scalar, select_c, ForcingConfig};
pub use spectral::periodic_derivative;
