//! Target curves: declarative specifications, arclength resampling, and
//! spectrally differentiated curvature profiles.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polygon;
use crate::spectral::{PeriodicDifferentiator, PeriodicInterpolant};
use crate::vec2::{self, Point};

/// Smallest grid accepted by [`build_target`].
pub const MIN_GRID: usize = 64;
/// Oversampling of the raw parametrization used for the arclength table.
const ARCLENGTH_OVERSAMPLE: usize = 64;
/// Maximal relative change of `k` tolerated when the grid is doubled.
const RESOLUTION_TOL: f64 = 0.01;
/// Maximal endpoint gap of a closed raw parametrization.
const CLOSURE_TOL: f64 = 1e-10;

/// Declarative description of a closed target curve.
///
/// All built-in kinds are traversed counterclockwise after construction;
/// a clockwise raw parametrization is reversed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        radius: f64,
    },
    /// Semi-axes `a` along x and `b` along y, `a >= b`.
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `x = 7 sin u + 2 sin 2u`, `y = 4 - 2 cos u - 4 cos^2 u + sin^2 u`.
    Bean,
    /// `x(t) = sum_j x_cos[j] cos(j t) + x_sin[j] sin(j t)`, likewise `y`;
    /// harmonic index `j` starts at 0.
    Fourier {
        x_cos: Vec<f64>,
        x_sin: Vec<f64>,
        y_cos: Vec<f64>,
        y_sin: Vec<f64>,
    },
}

impl CurveSpec {
    pub fn circle(radius: f64) -> Self {
        CurveSpec::Circle { radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        CurveSpec::Ellipse { a, b }
    }

    /// Short identifier used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            CurveSpec::Circle { .. } => "circle",
            CurveSpec::Ellipse { .. } => "ellipse",
            CurveSpec::Bean => "bean",
            CurveSpec::Fourier { .. } => "fourier",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        match self {
            CurveSpec::Circle { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("circle radius must be positive, got {radius}"));
                }
            }
            CurveSpec::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *b > 0.0 && a >= b) {
                    return bad(format!("ellipse needs a >= b > 0, got a = {a}, b = {b}"));
                }
            }
            CurveSpec::Bean => {}
            CurveSpec::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => {
                if x_cos.len() != x_sin.len() || y_cos.len() != y_sin.len() {
                    return bad("fourier cosine and sine sequences differ in length".into());
                }
                if x_cos.is_empty() || y_cos.is_empty() {
                    return bad("fourier coefficient sequences are empty".into());
                }
                if x_cos
                    .iter()
                    .chain(x_sin)
                    .chain(y_cos)
                    .chain(y_sin)
                    .any(|c| !c.is_finite())
                {
                    return bad("fourier coefficients must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// The raw trigonometric parametrization on `[0, 2 pi)`, oriented
    /// counterclockwise.
    pub fn raw_curve(&self) -> Result<RawCurve> {
        self.validate()?;
        let raw = match self {
            CurveSpec::Circle { radius } => RawCurve {
                x: Harmonics::new(vec![0.0, *radius], vec![0.0, 0.0]),
                y: Harmonics::new(vec![0.0, 0.0], vec![0.0, *radius]),
            },
            CurveSpec::Ellipse { a, b } => RawCurve {
                x: Harmonics::new(vec![0.0, *a], vec![0.0, 0.0]),
                y: Harmonics::new(vec![0.0, 0.0], vec![0.0, *b]),
            },
            // cos^2 = (1 + cos 2u)/2 and sin^2 = (1 - cos 2u)/2 turn y into
            // 5/2 - 2 cos u - 5/2 cos 2u.
            CurveSpec::Bean => RawCurve {
                x: Harmonics::new(vec![0.0; 3], vec![0.0, 7.0, 2.0]),
                y: Harmonics::new(vec![2.5, -2.0, -2.5], vec![0.0; 3]),
            },
            CurveSpec::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => RawCurve {
                x: Harmonics::new(x_cos.clone(), x_sin.clone()),
                y: Harmonics::new(y_cos.clone(), y_sin.clone()),
            },
        };
        let area = raw.signed_area();
        if !(area.abs() > 1e-12) {
            return Err(Error::InvalidSpec("curve encloses no area".into()));
        }
        Ok(if area < 0.0 { raw.reversed() } else { raw })
    }
}

/// Finite Fourier series `sum_j c_j cos(j t) + s_j sin(j t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonics {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Harmonics {
    fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin }
    }

    /// Value and first two derivatives at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (j, (&c, &s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = j as f64;
            let (sn, cs) = (w * t).sin_cos();
            v += c * cs + s * sn;
            d1 += w * (-c * sn + s * cs);
            d2 -= w * w * (c * cs + s * sn);
        }
        (v, d1, d2)
    }
}

/// Raw closed parametrization `t -> (x(t), y(t))`, `t` in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCurve {
    x: Harmonics,
    y: Harmonics,
}

impl RawCurve {
    pub fn position(&self, t: f64) -> Point {
        [self.x.eval(t).0, self.y.eval(t).0]
    }

    /// Position, first and second parameter derivatives.
    pub fn jet(&self, t: f64) -> (Point, Point, Point) {
        let (x, xd, xdd) = self.x.eval(t);
        let (y, yd, ydd) = self.y.eval(t);
        ([x, y], [xd, yd], [xdd, ydd])
    }

    pub fn speed(&self, t: f64) -> f64 {
        vec2::norm(self.jet(t).1)
    }

    /// Closed-form curvature of the raw parametrization.
    pub fn curvature(&self, t: f64) -> f64 {
        let (_, d1, d2) = self.jet(t);
        vec2::cross(d1, d2) / vec2::norm(d1).powi(3)
    }

    /// Green's-theorem area, exact for trigonometric polynomials.
    pub fn signed_area(&self) -> f64 {
        let h = self.x.cos.len().max(self.y.cos.len());
        let get = |v: &Vec<f64>, j: usize| v.get(j).copied().unwrap_or(0.0);
        (1..h)
            .map(|j| {
                j as f64
                    * (get(&self.x.cos, j) * get(&self.y.sin, j)
                        - get(&self.x.sin, j) * get(&self.y.cos, j))
            })
            .sum::<f64>()
            * std::f64::consts::PI
    }

    fn reversed(&self) -> Self {
        let flip =
            |h: &Harmonics| Harmonics::new(h.cos.clone(), h.sin.iter().map(|s| -s).collect());
        Self {
            x: flip(&self.x),
            y: flip(&self.y),
        }
    }
}

/// An embedded closed curve sampled on a uniform arclength grid.
#[derive(Debug, Clone)]
pub struct TargetCurve {
    spec: CurveSpec,
    n: usize,
    length: f64,
    u: Vec<f64>,
    raw_parameter: Vec<f64>,
    position: Vec<Point>,
    tangent: Vec<Point>,
    normal: Vec<Point>,
    k: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    kmin: f64,
    kmax: f64,
    diff: PeriodicDifferentiator,
    x_interp: PeriodicInterpolant,
    y_interp: PeriodicInterpolant,
    k_interp: PeriodicInterpolant,
}

/// Build a target curve on an `n`-point arclength grid.
pub fn build_target(spec: &CurveSpec, n: usize) -> Result<TargetCurve> {
    if n < MIN_GRID || !n.is_power_of_two() {
        return Err(Error::BadGridSize(n, MIN_GRID));
    }
    let raw = spec.raw_curve()?;
    let gap = vec2::dist(raw.position(0.0), raw.position(TAU));
    if gap > CLOSURE_TOL {
        return Err(Error::NotClosed(gap));
    }

    let curve = sample(spec, &raw, n)?;
    let fine = sample(spec, &raw, 2 * n)?;
    let scale = curve.k.iter().fold(0.0_f64, |m, k| m.max(k.abs()));
    let change = curve
        .k
        .iter()
        .enumerate()
        .map(|(i, k)| (k - fine.k[2 * i]).abs())
        .fold(0.0, f64::max)
        / scale;
    if change > RESOLUTION_TOL {
        return Err(Error::ResolutionTooLow(change));
    }

    if let Some((i, j)) = polygon::first_self_intersection(&curve.position) {
        return Err(Error::SelfIntersecting(i, j));
    }
    Ok(curve)
}

/// Cumulative arclength of the raw curve on an oversampled uniform parameter
/// grid. Trapezoidal sums carry the endpoint Euler-Maclaurin correction, which
/// is available because the speed derivative is known in closed form.
struct ArclengthTable {
    step: f64,
    speed: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl ArclengthTable {
    fn new(raw: &RawCurve, samples: usize) -> Result<Self> {
        let step = TAU / samples as f64;
        let mut speed = Vec::with_capacity(samples + 1);
        let mut dspeed = Vec::with_capacity(samples + 1);
        for j in 0..=samples {
            let (_, d1, d2) = raw.jet(j as f64 * step);
            let s = vec2::norm(d1);
            speed.push(s);
            dspeed.push(vec2::dot(d1, d2) / s);
        }
        let smin = speed.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = speed.iter().cloned().fold(0.0, f64::max);
        if !(smin > 1e-12 * smax.max(1e-300)) {
            return Err(Error::SingularParametrization(smin));
        }
        let mut cumulative = Vec::with_capacity(samples + 1);
        let mut trap = 0.0;
        cumulative.push(0.0);
        for j in 1..=samples {
            trap += 0.5 * step * (speed[j - 1] + speed[j]);
            cumulative.push(trap - step * step / 12.0 * (dspeed[j] - dspeed[0]));
        }
        let total = step * speed[..samples].iter().sum::<f64>();
        cumulative[samples] = total;
        Ok(Self {
            step,
            speed,
            cumulative,
            total,
        })
    }

    /// Invert the arclength map at increasing targets with cubic Hermite
    /// interpolation; slopes are the exact `dt/ds = 1/speed`, which are
    /// positive, so the interpolant is monotone on the fine table.
    fn invert(&self, targets: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(targets.len());
        let mut j = 0;
        let last = self.cumulative.len() - 2;
        for &s in targets {
            while j < last && self.cumulative[j + 1] <= s {
                j += 1;
            }
            let (s0, s1) = (self.cumulative[j], self.cumulative[j + 1]);
            let h = s1 - s0;
            let x = (s - s0) / h;
            let (t0, t1) = (j as f64 * self.step, (j + 1) as f64 * self.step);
            let (m0, m1) = (h / self.speed[j], h / self.speed[j + 1]);
            let x2 = x * x;
            let x3 = x2 * x;
            let t = (2.0 * x3 - 3.0 * x2 + 1.0) * t0
                + (x3 - 2.0 * x2 + x) * m0
                + (-2.0 * x3 + 3.0 * x2) * t1
                + (x3 - x2) * m1;
            out.push(t);
        }
        out
    }
}

fn sample(spec: &CurveSpec, raw: &RawCurve, n: usize) -> Result<TargetCurve> {
    let table = ArclengthTable::new(raw, ARCLENGTH_OVERSAMPLE * n)?;
    let length = table.total;
    let u: Vec<f64> = (0..n).map(|i| i as f64 * length / n as f64).collect();
    let raw_parameter = table.invert(&u);
    let position: Vec<Point> = raw_parameter.iter().map(|&t| raw.position(t)).collect();

    let diff = PeriodicDifferentiator::new(n, length);
    let xs: Vec<f64> = position.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = position.iter().map(|p| p[1]).collect();
    let dx = diff.derivatives(&xs, 2);
    let dy = diff.derivatives(&ys, 2);

    let mut tangent = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    for i in 0..n {
        let d1 = [dx[0][i], dy[0][i]];
        let d2 = [dx[1][i], dy[1][i]];
        let speed = vec2::norm(d1);
        let t = vec2::scale(d1, 1.0 / speed);
        tangent.push(t);
        normal.push(vec2::perp(t));
        k.push(vec2::cross(d1, d2) / speed.powi(3));
    }
    let mut dk = diff.derivatives(&k, 3).into_iter();
    let (k1, k2, k3) = (dk.next().unwrap(), dk.next().unwrap(), dk.next().unwrap());

    let k_interp = PeriodicInterpolant::new(&k, length);
    let kmin = refine_extremum(&k, &k_interp, length, false);
    let kmax = refine_extremum(&k, &k_interp, length, true);

    Ok(TargetCurve {
        spec: spec.clone(),
        n,
        length,
        u,
        raw_parameter,
        position,
        tangent,
        normal,
        k,
        k1,
        k2,
        k3,
        kmin,
        kmax,
        diff,
        x_interp: PeriodicInterpolant::new(&xs, length),
        y_interp: PeriodicInterpolant::new(&ys, length),
        k_interp,
    })
}

/// Node scan, three-point quadratic fit around the extremal node, then Newton
/// polishing of `k_u = 0` on the trigonometric interpolant of `k`.
fn refine_extremum(k: &[f64], interp: &PeriodicInterpolant, length: f64, max: bool) -> f64 {
    let n = k.len();
    let sign = if max { 1.0 } else { -1.0 };
    let i = (0..n)
        .max_by(|&a, &b| (sign * k[a]).total_cmp(&(sign * k[b])))
        .unwrap();
    let (km, k0, kp) = (k[(i + n - 1) % n], k[i], k[(i + 1) % n]);
    let curv = km - 2.0 * k0 + kp;
    if sign * curv >= -1e-14 * k0.abs().max(1.0) {
        // flat (e.g. constant curvature); the node value is the extremum
        return k0;
    }
    let h = length / n as f64;
    let offset = (0.5 * (km - kp) / curv).clamp(-1.0, 1.0);
    let mut u = (i as f64 + offset) * h;
    for _ in 0..8 {
        let (_, d1, d2) = interp.eval(u);
        if d2 == 0.0 {
            break;
        }
        let step = (d1 / d2).clamp(-h, h);
        u -= step;
        if step.abs() < 1e-15 * length {
            break;
        }
    }
    let refined = interp.eval(u).0;
    // Newton must not walk away from the bracketing node.
    if sign * refined >= sign * k0 {
        refined
    } else {
        k0 - (kp - km).powi(2) / (8.0 * curv)
    }
}

impl TargetCurve {
    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    /// Uniform node spacing `L / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    /// Raw parameter values of the arclength nodes.
    pub fn raw_parameter(&self) -> &[f64] {
        &self.raw_parameter
    }
    pub fn position(&self) -> &[Point] {
        &self.position
    }
    pub fn tangent(&self) -> &[Point] {
        &self.tangent
    }
    /// Inward unit normal, the tangent rotated by +pi/2.
    pub fn normal(&self) -> &[Point] {
        &self.normal
    }
    pub fn k(&self) -> &[f64] {
        &self.k
    }
    pub fn k1(&self) -> &[f64] {
        &self.k1
    }
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }
    pub fn k3(&self) -> &[f64] {
        &self.k3
    }
    pub fn kmin(&self) -> f64 {
        self.kmin
    }
    pub fn kmax(&self) -> f64 {
        self.kmax
    }
    pub fn is_convex(&self) -> bool {
        self.kmin >= 0.0
    }
    pub fn differentiator(&self) -> &PeriodicDifferentiator {
        &self.diff
    }

    /// Derivative of order `order` of periodic samples on this curve's grid.
    pub fn derivative(&self, values: &[f64], order: usize) -> Vec<f64> {
        self.diff.derivative(values, order)
    }

    /// Position, unit tangent, inward normal and curvature at arbitrary
    /// arclength `u`, by trigonometric interpolation of the node data.
    pub fn frame_at(&self, u: f64) -> Frame {
        // all three interpolants share the grid
        let st = self.x_interp.stencil(u);
        let (x, xd, xdd) = self.x_interp.eval_at(&st);
        let (y, yd, ydd) = self.y_interp.eval_at(&st);
        let inv_speed = 1.0 / (xd * xd + yd * yd).sqrt();
        let tangent = [xd * inv_speed, yd * inv_speed];
        Frame {
            position: [x, y],
            velocity: [xd, yd],
            acceleration: [xdd, ydd],
            tangent,
            normal: vec2::perp(tangent),
            k: self.k_interp.value_at(&st),
        }
    }

    /// Signed area enclosed by the node polygon.
    pub fn signed_area(&self) -> f64 {
        polygon::signed_area(&self.position)
    }
}

/// Local geometry of the target at an off-grid arclength.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub position: Point,
    /// `d eta / du` of the interpolant (unit up to interpolation error).
    pub velocity: Point,
    pub acceleration: Point,
    pub tangent: Point,
    pub normal: Point,
    pub k: f64,
}

/// Curvature samples and their refined extrema.
pub fn curvature_profile(curve: &TargetCurve) -> (Vec<f64>, f64, f64) {
    (curve.k.clone(), curve.kmin, curve.kmax)
}

/// Discrete curvature of a closed curve sampled at `n` uniform parameter
/// values over a period `length`, by spectral differentiation of its points.
/// The parametrization need not be by arclength.
pub fn sampled_curvature(points: &[Point], diff: &PeriodicDifferentiator) -> Vec<f64> {
    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let dx = diff.derivatives(&xs, 2);
    let dy = diff.derivatives(&ys, 2);
    (0..points.len())
        .map(|i| {
            let d1 = [dx[0][i], dy[0][i]];
            let d2 = [dx[1][i], dy[1][i]];
            vec2::cross(d1, d2) / vec2::norm(d1).powi(3)
        })
        .collect()
}

/// Unit inward normals of a sampled closed curve (tangent rotated by +pi/2).
pub fn sampled_normals(points: &[Point], diff: &PeriodicDifferentiator) -> Vec<Point> {
    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let dx = diff.derivative(&xs, 1);
    let dy = diff.derivative(&ys, 1);
    dx.iter()
        .zip(&dy)
        .map(|(&a, &b)| {
            let s = a.hypot(b);
            vec2::perp([a / s, b / s])
        })
        .collect()
}
