//! Shaping the receiving control pulse so that η(∞) = ζ(∞) = π.
//!
//! Both areas are linear in |G₂|√f₂, so one Gaussian has three knobs: peak
//! amplitude Ω₂, duration T₂ and center t₀. Two of them are solved for, the
//! third is held fixed. The solve is nested: for a trial T₂ an inner 1-D root
//! finder places η(∞) on π with the other free variable, and an outer 1-D root
//! finder moves T₂ until ζ(∞) = π as well.

use std::cell::{Cell, RefCell};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::numerics::{find_root_with, trapezoid, RootOptions};
use crate::params::PhysicalParams;
use crate::photonics::ModeFunctions;
use crate::pulse::PulseShape;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeVariables {
    /// Ω₂ fixed; solve for T₂ and t₀.
    WidthAndCenter,
    /// t₀ fixed; solve for T₂ and Ω₂.
    WidthAndAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSolveOptions<T> {
    pub free: FreeVariables,
    /// Ω₂ (rad/s): fixed value, or the starting guess when it is free.
    pub amplitude: T,
    /// t₀ (s) used when the center is fixed.
    pub center: T,
    pub width_range: (T, T),
    pub center_range: (T, T),
    pub amplitude_range: (T, T),
    /// Samples per bracket scan.
    pub scan_points: usize,
    /// Required |η(∞) − π| and |ζ(∞) − π|.
    pub tol: T,
    /// Iteration cap for each 1-D root solve.
    pub max_iter: usize,
}

impl<T: Real> PulseSolveOptions<T> {
    /// Ω₂ fixed at `amplitude`, T₂ ∈ [0.05, 5] μs, t₀ ∈ [−2, 2] μs.
    pub fn width_and_center(amplitude: T) -> Self {
        Self {
            free: FreeVariables::WidthAndCenter,
            amplitude,
            center: T::zero(),
            width_range: (T::lit(0.05e-6), T::lit(5e-6)),
            center_range: (T::lit(-2e-6), T::lit(2e-6)),
            amplitude_range: (amplitude * T::lit(0.01), amplitude * T::lit(100.0)),
            scan_points: 48,
            tol: T::lit(1e-6),
            max_iter: 200,
        }
    }

    /// t₀ fixed at `center`, Ω₂ searched around `amplitude`.
    pub fn width_and_amplitude(amplitude: T, center: T) -> Self {
        Self {
            free: FreeVariables::WidthAndAmplitude,
            center,
            ..Self::width_and_center(amplitude)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSolveResult<T> {
    pub free: FreeVariables,
    /// Peak Rabi frequency Ω₂ (rad/s).
    pub amplitude: T,
    pub width: T,
    pub center: T,
    pub residual_eta: T,
    pub residual_zeta: T,
    /// Number of area evaluations.
    pub iterations: usize,
}

impl<T: Real> PulseSolveResult<T> {
    pub fn pulse(&self) -> PulseShape<T> {
        PulseShape::Gaussian {
            center: self.center,
            duration: self.width,
        }
    }
}

/// Closest approach to the π/π target seen during a failed solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestFound<T> {
    pub amplitude: T,
    pub width: T,
    pub center: T,
    pub residual_eta: T,
    pub residual_zeta: T,
}

impl<T: Real> BestFound<T> {
    fn score(&self) -> T {
        self.residual_eta.abs().max(self.residual_zeta.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError<T: Real> {
    #[error("pulse solve did not converge after {iterations} evaluations: {reason}")]
    NotConverged {
        reason: String,
        best: Option<BestFound<T>>,
        iterations: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl<T: Real> SolveError<T> {
    pub fn best(&self) -> Option<&BestFound<T>> {
        match self {
            Self::NotConverged { best, .. } => best.as_ref(),
            Self::Model(_) => None,
        }
    }
}

/// Area totals for a Gaussian receiving pulse, with the mode-dependent parts
/// precomputed.
struct AreaModel<'a, T> {
    times: Vec<T>,
    phi1: &'a [T],
    phi_sum: Vec<T>,
    step: T,
    /// g / (|Δ| √k): multiply by Ω₂ to get |G₂|/√k.
    coupling_per_rabi: T,
    evaluations: Cell<usize>,
    best: RefCell<Option<BestFound<T>>>,
}

impl<'a, T: Real> AreaModel<'a, T> {
    fn new(modes: &'a ModeFunctions<T>, params: &PhysicalParams<T>) -> Self {
        let phi1 = modes.phi1.samples();
        let phi_sum = phi1
            .iter()
            .zip(modes.phi2.samples())
            .map(|(a, b)| *a + *b)
            .collect();
        Self {
            times: modes.grid().values(),
            phi1,
            phi_sum,
            step: modes.grid().step(),
            coupling_per_rabi: params.g / (params.delta.abs() * params.k.sqrt()),
            evaluations: Cell::new(0),
            best: RefCell::new(None),
        }
    }

    /// (η(∞), ζ(∞)) for amplitude Ω₂, duration T₂ and center t₀.
    fn finals(&self, amplitude: T, width: T, center: T) -> (T, T) {
        self.evaluations.set(self.evaluations.get() + 1);
        let inv = T::one() / (T::two() * width * width);
        let mut w1 = Vec::with_capacity(self.times.len());
        let mut w2 = Vec::with_capacity(self.times.len());
        for (i, &t) in self.times.iter().enumerate() {
            let d = t - center;
            let root_f2 = (-d * d * inv).exp();
            w1.push(root_f2 * self.phi1[i]);
            w2.push(root_f2 * self.phi_sum[i]);
        }
        let pref = self.coupling_per_rabi * amplitude.abs();
        let eta = T::two() * pref * trapezoid(self.step, &w1);
        let zeta = pref * trapezoid(self.step, &w2);
        let cand = BestFound {
            amplitude,
            width,
            center,
            residual_eta: eta - T::PI(),
            residual_zeta: zeta - T::PI(),
        };
        let mut best = self.best.borrow_mut();
        if best.map_or(true, |b| cand.score() < b.score()) {
            *best = Some(cand);
        }
        (eta, zeta)
    }
}

fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let n = n.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
        .collect()
}

fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(T::exp).collect()
}

/// First adjacent pair of scan points with a sign change of `values`.
fn sign_change<T: Real>(xs: &[T], values: &[Option<T>]) -> Option<(T, T)> {
    xs.windows(2).zip(values.windows(2)).find_map(|(x, v)| match (v[0], v[1]) {
        (Some(a), Some(b)) if a == T::zero() || a.signum() != b.signum() => Some((x[0], x[1])),
        _ => None,
    })
}

/// Solves η(∞) = ζ(∞) = π for a Gaussian receiving pulse.
///
/// `params` supplies g, Δ and k; its `omega2` is ignored in favor of
/// `opts.amplitude`.
pub fn solve_pulse_shape<T: Real>(
    modes: &ModeFunctions<T>,
    params: &PhysicalParams<T>,
    opts: &PulseSolveOptions<T>,
) -> Result<PulseSolveResult<T>, SolveError<T>> {
    params.validate()?;
    let model = AreaModel::new(modes, params);
    let pi = T::PI();
    let inner_opts = RootOptions {
        f_tol: opts.tol * T::lit(1e-3),
        x_tol: T::epsilon(),
        max_iter: opts.max_iter,
    };
    let outer_opts = RootOptions {
        f_tol: opts.tol * T::lit(1e-2),
        x_tol: T::epsilon(),
        max_iter: opts.max_iter,
    };

    // Given T₂, returns (amplitude, center) with η(∞) = π, if reachable.
    let inner = |width: T| -> Option<(T, T)> {
        match opts.free {
            FreeVariables::WidthAndAmplitude => {
                let (lo, hi) = opts.amplitude_range;
                find_root_with(
                    |amp| model.finals(amp, width, opts.center).0 - pi,
                    (lo, hi),
                    &inner_opts,
                )
                .ok()
                .map(|amp| (amp, opts.center))
            }
            FreeVariables::WidthAndCenter => {
                let (lo, hi) = opts.center_range;
                let centers = linspace(lo, hi, opts.scan_points);
                let etas: Vec<T> = centers
                    .iter()
                    .map(|&c| model.finals(opts.amplitude, width, c).0 - pi)
                    .collect();
                let peak = etas
                    .iter()
                    .enumerate()
                    .fold(0, |bi, (i, v)| if *v > etas[bi] { i } else { bi });
                if etas[peak] < T::zero() {
                    return None;
                }
                // prefer the later crossing: the receiving pulse trails the photons
                let later: Vec<Option<T>> = etas[peak..].iter().map(|v| Some(*v)).collect();
                let bracket = sign_change(&centers[peak..], &later).or_else(|| {
                    let earlier: Vec<Option<T>> = etas[..=peak].iter().map(|v| Some(*v)).collect();
                    sign_change(&centers[..=peak], &earlier)
                })?;
                find_root_with(
                    |c| model.finals(opts.amplitude, width, c).0 - pi,
                    bracket,
                    &inner_opts,
                )
                .ok()
                .map(|c| (opts.amplitude, c))
            }
        }
    };
    let outer = |width: T| -> Option<T> {
        let (amp, center) = inner(width)?;
        Some(model.finals(amp, width, center).1 - pi)
    };

    let not_converged = |reason: String| SolveError::NotConverged {
        reason,
        best: *model.best.borrow(),
        iterations: model.evaluations.get(),
    };

    let (w_lo, w_hi) = opts.width_range;
    if !(w_lo > T::zero() && w_hi > w_lo) {
        return Err(ModelError::InvalidParameter {
            name: "width_range",
            value: w_lo.to_f64().unwrap_or(f64::NAN),
            reason: "must satisfy 0 < lo < hi",
        }
        .into());
    }
    let widths = logspace(w_lo, w_hi, opts.scan_points);
    let scanned: Vec<Option<T>> = widths.iter().map(|&w| outer(w)).collect();
    if scanned.iter().all(Option::is_none) {
        return Err(not_converged(
            "eta(inf) = pi is unreachable for every width in range".to_string(),
        ));
    }
    let Some(bracket) = sign_change(&widths, &scanned) else {
        return Err(not_converged(
            "zeta(inf) - pi has no sign change over the width range".to_string(),
        ));
    };
    let width = find_root_with(
        |w| outer(w).unwrap_or_else(T::nan),
        bracket,
        &outer_opts,
    )
    .map_err(|e| not_converged(e.to_string()))?;
    let (amplitude, center) = inner(width).ok_or_else(|| not_converged("inner solve failed at the final width".to_string()))?;
    let (eta, zeta) = model.finals(amplitude, width, center);
    let result = PulseSolveResult {
        free: opts.free,
        amplitude,
        width,
        center,
        residual_eta: eta - pi,
        residual_zeta: zeta - pi,
        iterations: model.evaluations.get(),
    };
    if result.residual_eta.abs() > opts.tol || result.residual_zeta.abs() > opts.tol {
        return Err(not_converged(format!(
            "residuals {} / {} exceed tolerance",
            result.residual_eta, result.residual_zeta
        )));
    }
    Ok(result)
}
