//! Peak-normalized control-pulse intensity profiles f(t) ∈ [0, 1].

use crate::error::ModelError;
use crate::numerics::{SampledFunction, TimeGrid};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape<T> {
    /// f(t) = exp(−((t − center)/duration)²)
    Gaussian { center: T, duration: T },
    /// Linear interpolation between uniformly spaced samples, zero outside.
    Tabulated { t_start: T, step: T, values: Vec<T> },
}

impl<T: Real> PulseShape<T> {
    pub fn gaussian(center: T, duration: T) -> Result<Self, ModelError> {
        if !(duration > T::zero()) || !duration.is_finite() || !center.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "pulse duration",
                value: duration.to_f64().unwrap_or(f64::NAN),
                reason: "must be finite and > 0",
            });
        }
        Ok(Self::Gaussian { center, duration })
    }

    pub fn tabulated(grid: &TimeGrid<T>, values: Vec<T>) -> Result<Self, ModelError> {
        if values.len() != grid.len() {
            return Err(crate::error::NumericsError::LengthMismatch {
                grid: grid.len(),
                samples: values.len(),
            }
            .into());
        }
        let slack = T::tol_floor(1e-12);
        if let Some(&bad) = values
            .iter()
            .find(|v| !(**v >= T::zero() && **v <= T::one() + slack))
        {
            return Err(ModelError::InvalidParameter {
                name: "tabulated pulse",
                value: bad.to_f64().unwrap_or(f64::NAN),
                reason: "samples must lie in [0, 1]",
            });
        }
        Ok(Self::Tabulated {
            t_start: grid.t_start(),
            step: grid.step(),
            values,
        })
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            Self::Gaussian { center, duration } => {
                let x = (t - *center) / *duration;
                (-x * x).exp()
            }
            Self::Tabulated {
                t_start,
                step,
                values,
            } => {
                let s = (t - *t_start) / *step;
                let n = values.len();
                if s < T::zero() || s > T::from_usize_lossy(n - 1) {
                    return T::zero();
                }
                let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
                let u = s - T::from_usize_lossy(i);
                values[i] + (values[i + 1] - values[i]) * u
            }
        }
    }

    pub fn sample(&self, grid: &TimeGrid<T>) -> SampledFunction<T> {
        SampledFunction::from_fn(*grid, |t| self.eval(t))
    }

    /// Duration parameter of a Gaussian pulse.
    pub fn duration(&self) -> Option<T> {
        match self {
            Self::Gaussian { duration, .. } => Some(*duration),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn center(&self) -> Option<T> {
        match self {
            Self::Gaussian { center, .. } => Some(*center),
            Self::Tabulated { .. } => None,
        }
    }
}
