//! Fourier-collocation differentiation and interpolation on uniform periodic grids.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Oversampling factor of the fine table behind [`PeriodicInterpolant`].
const OVERSAMPLE: usize = 8;

/// Spectral differentiation operator for a fixed grid size and period.
///
/// FFT plans are built once and shared, so a differentiator can be cloned
/// cheaply and used from several threads.
#[derive(Clone)]
pub struct PeriodicDifferentiator {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicDifferentiator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicDifferentiator")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

/// Signed wavenumber index of FFT bin `j` on an `n`-point grid.
fn signed_index(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// `(i * kappa)^order` as a complex number.
fn ik_power(kappa: f64, order: usize) -> Complex64 {
    let mag = kappa.powi(order as i32);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

impl PeriodicDifferentiator {
    pub fn new(n: usize, length: f64) -> Self {
        assert!(n >= 2, "grid needs at least two points");
        assert!(length > 0.0, "period must be positive");
        let mut planner = FftPlanner::new();
        Self {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    // The first sample is subtracted before transforming: derivatives do not
    // see the constant, and exactly constant input then yields exact zeros.
    fn spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n, "sample count does not match the grid");
        let base = values[0];
        let mut buf: Vec<Complex64> = values
            .iter()
            .map(|&v| Complex64::new(v - base, 0.0))
            .collect();
        self.forward.process(&mut buf);
        buf
    }

    fn synthesize(&self, spectrum: &[Complex64], order: usize) -> Vec<f64> {
        let n = self.n;
        let scale = 2.0 * PI / self.length;
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                if j == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                if n.is_multiple_of(2) && j == n / 2 && order % 2 == 1 {
                    // the Nyquist mode has no real odd derivative
                    return Complex64::new(0.0, 0.0);
                }
                c * ik_power(scale * signed_index(j, n), order)
            })
            .collect();
        self.inverse.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        buf.iter().map(|c| c.re * inv_n).collect()
    }

    /// The `order`-th derivative of the trigonometric interpolant of `values`.
    pub fn derivative(&self, values: &[f64], order: usize) -> Vec<f64> {
        if order == 0 {
            return values.to_vec();
        }
        let spec = self.spectrum(values);
        self.synthesize(&spec, order)
    }

    /// Derivatives of orders `1..=max_order` sharing one forward transform.
    pub fn derivatives(&self, values: &[f64], max_order: usize) -> Vec<Vec<f64>> {
        let spec = self.spectrum(values);
        (1..=max_order).map(|m| self.synthesize(&spec, m)).collect()
    }
}

/// One-shot spectral derivative of periodic samples with period `length`.
pub fn periodic_derivative(values: &[f64], order: usize, length: f64) -> Vec<f64> {
    PeriodicDifferentiator::new(values.len(), length).derivative(values, order)
}

/// Off-grid evaluation of the trigonometric interpolant of periodic samples.
///
/// The interpolant and its first two derivatives are tabulated on a grid
/// refined by zero-padding the spectrum; evaluation between fine nodes uses
/// quintic Hermite interpolation, so each query is O(1).
#[derive(Debug, Clone)]
pub struct PeriodicInterpolant {
    length: f64,
    h: f64,
    value: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl PeriodicInterpolant {
    pub fn new(values: &[f64], length: f64) -> Self {
        let n = values.len();
        assert!(
            n >= 4 && n.is_multiple_of(2),
            "interpolation needs an even grid"
        );
        let fine = OVERSAMPLE * n;
        let mut planner = FftPlanner::new();
        let mut coarse: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut coarse);

        let mut padded = vec![Complex64::new(0.0, 0.0); fine];
        for (j, &c) in coarse.iter().enumerate() {
            if j < n / 2 {
                padded[j] = c;
            } else if j == n / 2 {
                padded[j] = c * 0.5;
                padded[fine - n / 2] = c * 0.5;
            } else {
                padded[fine - (n - j)] = c;
            }
        }

        let inverse = planner.plan_fft_inverse(fine);
        let scale = 2.0 * PI / length;
        let inv_n = 1.0 / n as f64;
        let table = |order: usize| -> Vec<f64> {
            let mut buf: Vec<Complex64> = padded
                .iter()
                .enumerate()
                .map(|(j, &c)| c * ik_power(scale * signed_index(j, fine), order))
                .collect();
            inverse.process(&mut buf);
            buf.iter().map(|c| c.re * inv_n).collect()
        };

        Self {
            length,
            h: length / fine as f64,
            value: table(0),
            d1: table(1),
            d2: table(2),
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Value, first and second derivative at arclength `u` (any real, wrapped).
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        self.eval_at(&self.stencil(u))
    }

    /// Hermite weights at `u`, reusable for every interpolant built on the
    /// same grid size and period.
    pub fn stencil(&self, u: f64) -> Stencil {
        let m = self.value.len();
        let w = if (0.0..self.length).contains(&u) {
            u
        } else {
            u.rem_euclid(self.length)
        };
        let s = w / self.h;
        let mut i = s.floor() as usize;
        let mut t = s - i as f64;
        if i >= m {
            i = m - 1;
            t = 1.0;
        }
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        Stencil {
            i,
            j: (i + 1) % m,
            h: self.h,
            w: [
                1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
                t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
                0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
                0.5 * (t3 - 2.0 * t4 + t5),
                -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            ],
            wd: [
                -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
                1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
                0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
                0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
                -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            ],
            wdd: [
                -60.0 * t + 180.0 * t2 - 120.0 * t3,
                -36.0 * t + 96.0 * t2 - 60.0 * t3,
                0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
                0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
                -24.0 * t + 84.0 * t2 - 60.0 * t3,
            ],
        }
    }

    fn nodal(&self, st: &Stencil) -> [f64; 6] {
        let (i, j, h) = (st.i, st.j, st.h);
        [
            self.value[i],
            self.d1[i] * h,
            self.d2[i] * h * h,
            self.d2[j] * h * h,
            self.d1[j] * h,
            self.value[j],
        ]
    }

    /// Value and derivatives with precomputed weights.
    pub fn eval_at(&self, st: &Stencil) -> (f64, f64, f64) {
        let [p0, m0, a0, a1, m1, p1] = self.nodal(st);
        let comb = |w: &[f64; 5], last: f64| {
            p0 * w[0] + m0 * w[1] + a0 * w[2] + a1 * w[3] + m1 * w[4] + p1 * last
        };
        let v = comb(&st.w, 1.0 - st.w[0]);
        let vd = comb(&st.wd, -st.wd[0]);
        let vdd = comb(&st.wdd, -st.wdd[0]);
        (v, vd / st.h, vdd / (st.h * st.h))
    }

    /// Value only, with precomputed weights.
    pub fn value_at(&self, st: &Stencil) -> f64 {
        let [p0, m0, a0, a1, m1, p1] = self.nodal(st);
        let w = &st.w;
        p0 * w[0] + m0 * w[1] + a0 * w[2] + a1 * w[3] + m1 * w[4] + p1 * (1.0 - w[0])
    }
}

/// Quintic Hermite weights between two fine nodes `i` and `j = i + 1`.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    i: usize,
    j: usize,
    h: f64,
    w: [f64; 5],
    wd: [f64; 5],
    wdd: [f64; 5],
}
