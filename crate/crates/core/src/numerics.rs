//! Quadrature, fixed-step ODE integration and bracketed root finding.
//!
//! Nothing in here knows about the physics. Every routine works on a
//! [`TimeGrid`] with uniform spacing, and every routine is deterministic.

use num_complex::Complex;

use crate::error::NumericsError;
use crate::scalar::Real;

/// Uniform sampling of a time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_start: T,
    step: T,
    n_points: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn uniform(t_start: T, t_end: T, n_points: usize) -> Result<Self, NumericsError> {
        if n_points < 2 {
            return Err(NumericsError::GridTooSmall(n_points));
        }
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(NumericsError::InvalidGridSpan {
                t_start: t_start.to_f64().unwrap_or(f64::NAN),
                t_end: t_end.to_f64().unwrap_or(f64::NAN),
            });
        }
        let step = (t_end - t_start) / T::from_usize_lossy(n_points - 1);
        Ok(Self {
            t_start,
            step,
            n_points,
        })
    }

    /// Grid spanning `center ± half_span`.
    pub fn centered(center: T, half_span: T, n_points: usize) -> Result<Self, NumericsError> {
        Self::uniform(center - half_span, center + half_span, n_points)
    }

    /// Rebuilds a grid from explicit sample times, rejecting non-uniform spacing.
    ///
    /// Spacing must agree with the mean step to 1e-12 relative, plus the
    /// rounding noise of representing the sample times themselves.
    pub fn from_values(values: &[T]) -> Result<Self, NumericsError> {
        let n = values.len();
        if n < 2 {
            return Err(NumericsError::GridTooSmall(n));
        }
        let grid = Self::uniform(values[0], values[n - 1], n)?;
        let scale = values[0].abs().max(values[n - 1].abs());
        let slack = grid.step * T::tol_floor(1e-12) + T::lit(4.0) * T::epsilon() * scale;
        for (i, w) in values.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if (dt - grid.step).abs() > slack {
                return Err(NumericsError::NonUniformGrid {
                    index: i,
                    spacing: dt.to_f64().unwrap_or(f64::NAN),
                    expected: grid.step.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn t_start(&self) -> T {
        self.t_start
    }

    pub fn t_end(&self) -> T {
        self.t(self.n_points - 1)
    }

    #[inline]
    pub fn t(&self, i: usize) -> T {
        self.t_start + self.step * T::from_usize_lossy(i)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.n_points).map(move |i| self.t(i))
    }

    pub fn values(&self) -> Vec<T> {
        self.iter().collect()
    }
}

/// Values of a function on a [`TimeGrid`], one per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T, V = T> {
    grid: TimeGrid<T>,
    samples: Vec<V>,
}

impl<T: Real, V> SampledFunction<T, V> {
    pub fn new(grid: TimeGrid<T>, samples: Vec<V>) -> Result<Self, NumericsError> {
        if samples.len() != grid.len() {
            return Err(NumericsError::LengthMismatch {
                grid: grid.len(),
                samples: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: TimeGrid<T>, mut f: impl FnMut(T) -> V) -> Self {
        let samples = grid.iter().map(&mut f).collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[V] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<V> {
        self.samples
    }

    pub fn last(&self) -> &V {
        self.samples.last().expect("grid has at least two points")
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> SampledFunction<T, W> {
        SampledFunction {
            grid: self.grid,
            samples: self.samples.iter().map(f).collect(),
        }
    }

    /// Pointwise combination of two functions sampled on the same grid.
    pub fn zip_with<W, U>(
        &self,
        other: &SampledFunction<T, W>,
        mut f: impl FnMut(&V, &W) -> U,
    ) -> Result<SampledFunction<T, U>, NumericsError> {
        if self.grid != other.grid {
            return Err(NumericsError::GridMismatch);
        }
        Ok(SampledFunction {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl<T: Real> SampledFunction<T, T> {
    /// Four-point Lagrange interpolation; constant extrapolation outside the grid.
    pub fn eval(&self, t: T) -> T {
        let n = self.samples.len();
        let s = (t - self.grid.t_start) / self.grid.step;
        if s <= T::zero() {
            return self.samples[0];
        }
        let last = T::from_usize_lossy(n - 1);
        if s >= last {
            return self.samples[n - 1];
        }
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let u = s - T::from_usize_lossy(i);
        let y = &self.samples;
        if i == 0 || i + 2 >= n {
            return y[i] + (y[i + 1] - y[i]) * u;
        }
        let one = T::one();
        let two = T::two();
        let six = T::lit(6.0);
        let wm1 = -u * (u - one) * (u - two) / six;
        let w0 = (u + one) * (u - one) * (u - two) / two;
        let w1 = -(u + one) * u * (u - two) / two;
        let w2 = (u + one) * u * (u - one) / six;
        wm1 * y[i - 1] + w0 * y[i] + w1 * y[i + 1] + w2 * y[i + 2]
    }

    pub fn max_abs(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Trapezoidal running integral; the first sample is zero.
pub fn cumulative_integral<T: Real>(f: &SampledFunction<T>) -> SampledFunction<T> {
    let h = f.grid.step;
    let half = T::half();
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(f.samples.len());
    out.push(acc);
    for w in f.samples.windows(2) {
        acc = acc + half * h * (w[0] + w[1]);
        out.push(acc);
    }
    SampledFunction {
        grid: f.grid,
        samples: out,
    }
}

/// Trapezoidal integral over the whole grid.
pub fn integral<T: Real>(f: &SampledFunction<T>) -> T {
    trapezoid(f.grid.step, &f.samples)
}

pub(crate) fn trapezoid<T: Real>(step: T, samples: &[T]) -> T {
    let n = samples.len();
    if n < 2 {
        return T::zero();
    }
    let inner = samples[1..n - 1]
        .iter()
        .fold(T::zero(), |acc, &v| acc + v);
    step * (inner + T::half() * (samples[0] + samples[n - 1]))
}

/// Classical fourth-order Runge–Kutta on the grid points.
///
/// `rhs(t, y)` is the vector field. The returned trajectory holds one state
/// per grid point, starting with `init`.
pub fn integrate_ode<T, const N: usize, F>(
    rhs: F,
    init: [Complex<T>; N],
    grid: &TimeGrid<T>,
) -> Result<SampledFunction<T, [Complex<T>; N]>, NumericsError>
where
    T: Real,
    F: Fn(T, &[Complex<T>; N]) -> [Complex<T>; N],
{
    check_finite(&init, 0, grid.t_start())?;
    let h = grid.step();
    let half_h = h * T::half();
    let sixth = h / T::lit(6.0);
    let two = T::two();

    let mut states = Vec::with_capacity(grid.len());
    let mut y = init;
    states.push(y);
    for i in 0..grid.len() - 1 {
        let t = grid.t(i);
        let k1 = rhs(t, &y);
        check_finite(&k1, i, t)?;
        let k2 = rhs(t + half_h, &axpy(&y, half_h, &k1));
        check_finite(&k2, i, t + half_h)?;
        let k3 = rhs(t + half_h, &axpy(&y, half_h, &k2));
        check_finite(&k3, i, t + half_h)?;
        let k4 = rhs(t + h, &axpy(&y, h, &k3));
        check_finite(&k4, i, t + h)?;
        for j in 0..N {
            y[j] = y[j] + (k1[j] + (k2[j] + k3[j]) * two + k4[j]) * sixth;
        }
        states.push(y);
    }
    Ok(SampledFunction {
        grid: *grid,
        samples: states,
    })
}

#[inline]
fn axpy<T: Real, const N: usize>(y: &[Complex<T>; N], h: T, k: &[Complex<T>; N]) -> [Complex<T>; N] {
    let mut out = *y;
    for j in 0..N {
        out[j] = out[j] + k[j] * h;
    }
    out
}

fn check_finite<T: Real, const N: usize>(
    v: &[Complex<T>; N],
    step: usize,
    t: T,
) -> Result<(), NumericsError> {
    match v.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        None => Ok(()),
        Some(component) => Err(NumericsError::NonFiniteDerivative {
            step,
            time: t.to_f64().unwrap_or(f64::NAN),
            component,
        }),
    }
}

/// Stopping rules for [`find_root_with`].
#[derive(Debug, Clone, Copy)]
pub struct RootOptions<T> {
    /// Accept `x` once `|f(x)| <= f_tol`.
    pub f_tol: T,
    /// Accept once the bracket is narrower than `x_tol * |x|`.
    pub x_tol: T,
    pub max_iter: usize,
}

impl<T: Real> RootOptions<T> {
    pub fn new(tol: T) -> Self {
        Self {
            f_tol: tol,
            x_tol: tol,
            max_iter: 200,
        }
    }
}

/// Brent's method: bisection safeguarded secant / inverse quadratic steps.
///
/// Requires `f(a) * f(b) <= 0`. The result always lies inside `[a, b]`.
pub fn find_root<T: Real>(f: impl FnMut(T) -> T, bracket: (T, T), tol: T) -> Result<T, NumericsError> {
    find_root_with(f, bracket, &RootOptions::new(tol))
}

pub fn find_root_with<T: Real>(
    mut f: impl FnMut(T) -> T,
    bracket: (T, T),
    opts: &RootOptions<T>,
) -> Result<T, NumericsError> {
    let as_f64 = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let (mut a, mut b) = bracket;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(NumericsError::NonFiniteFunction {
            x: if fa.is_finite() { as_f64(b) } else { as_f64(a) },
        });
    }
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange {
            a: as_f64(a),
            b: as_f64(b),
            fa: as_f64(fa),
            fb: as_f64(fb),
        });
    }

    let two = T::two();
    let three = T::lit(3.0);
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + T::half() * opts.x_tol * b.abs();
        let xm = T::half() * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= opts.f_tol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else {
            b + tol1.max(T::min_positive_value()) * xm.signum()
        };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::NonFiniteFunction { x: as_f64(b) });
        }
    }
    Err(NumericsError::RootNotConverged {
        iterations: opts.max_iter,
        best: as_f64(b),
        residual: as_f64(fb),
    })
}
