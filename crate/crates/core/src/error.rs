use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve specification: {0}")]
    InvalidSpec(String),
    #[error("grid size {0} must be a power of two and at least {1}")]
    BadGridSize(usize, usize),
    #[error("target curve is not embedded: segments {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("raw parametrization is not closed (endpoint gap {0:e})")]
    NotClosed(f64),
    #[error("curvature profile changes by {0:.3e} (relative) when the grid is doubled")]
    ResolutionTooLow(f64),
    #[error("raw parametrization is singular (speed {0:e})")]
    SingularParametrization(f64),

    #[error("offset curve at r = {0} self-intersects; the tubular neighbourhood is limited by global geometry")]
    TubularDegenerate(f64),
    #[error("r = {r} lies outside the admissible interval ({lo}, {hi})")]
    OutsideChart { r: f64, lo: f64, hi: f64 },

    #[error("1 - k r = {0:e} is too close to zero")]
    ChartBoundary(f64),
    #[error("forcing constant override {0} is below 1")]
    InvalidOverride(f64),

    #[error("denominator 1 - k r = {value:e} at node {node} fell below delta/2 = {bound:e}")]
    DenominatorBreach { node: usize, value: f64, bound: f64 },
    #[error("graph function left the admissible interval at node {node} (r = {r}, t = {t})")]
    GraphicalityLost { node: usize, r: f64, t: f64 },
    #[error("initial data invalid: {0}")]
    InvalidInitialData(String),

    #[error("polygon segment {0} has length below 1e-12")]
    DegenerateSegment(usize),
    #[error("vertex {vertex} left the tubular neighbourhood at t = {t}")]
    LeftChart { vertex: usize, t: f64 },
    #[error("polygon lost simplicity: segments {0} and {1} intersect")]
    PolygonNotSimple(usize, usize),

    #[error("barrier bracket invalid: {0}")]
    BracketInvalid(String),
    #[error("analysis window is empty: {0}")]
    WindowEmpty(String),
    #[error("fit requires positive values: {0}")]
    NonpositiveValues(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
