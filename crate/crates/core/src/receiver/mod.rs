//! Receiving node: coherent absorption of the incoming photons.
//!
//! The receiving atom starts in m_F = +1. Its amplitudes γ_{m,j} split into a
//! two-level block (γ₀,₀, γ₊₁,₁) driven by the area η and a three-level block
//! (γ₋₁,₀, γ₀,₁, γ₊₁,₂) driven by ζ, where
//!
//! ```text
//! η(t) = 2 |G₂|/√k ∫ √f₂ Φ₁ dt,    ζ(t) = |G₂|/√k ∫ √f₂ (Φ₁ + Φ₂) dt
//! ```
//!
//! The photon travel delay is dropped (cascaded-system convention).

mod solve;

use num_complex::Complex;

pub use solve::{
    solve_pulse_shape, BestFound, FreeVariables, PulseSolveOptions, PulseSolveResult, SolveError,
};

use crate::error::ModelError;
use crate::numerics::{cumulative_integral, integrate_ode, SampledFunction, TimeGrid};
use crate::params::SuperpositionState;
use crate::photonics::ModeFunctions;
use crate::pulse::PulseShape;
use crate::scalar::{cplx, real, Real};

/// Cumulative pulse areas η(t), ζ(t).
#[derive(Debug, Clone, PartialEq)]
pub struct PulseAreas<T> {
    pub eta: SampledFunction<T>,
    pub zeta: SampledFunction<T>,
}

impl<T: Real> PulseAreas<T> {
    pub fn finals(&self) -> (T, T) {
        (*self.eta.last(), *self.zeta.last())
    }
}

/// η and ζ for a receiving pulse `pulse2` with Raman coupling `g2` (rad/s).
pub fn pulse_areas<T: Real>(pulse2: &PulseShape<T>, modes: &ModeFunctions<T>, g2: T, k: T) -> PulseAreas<T> {
    let grid = *modes.grid();
    let pref = g2.abs() / k.sqrt();
    let sqrt_f2: Vec<T> = grid.iter().map(|t| pulse2.eval(t).sqrt()).collect();
    let p1 = modes.phi1.samples();
    let p2 = modes.phi2.samples();
    let eta_rate: Vec<T> = (0..grid.len())
        .map(|i| T::two() * pref * sqrt_f2[i] * p1[i])
        .collect();
    let zeta_rate: Vec<T> = (0..grid.len())
        .map(|i| pref * sqrt_f2[i] * (p1[i] + p2[i]))
        .collect();
    let wrap = |v| SampledFunction::new(grid, v).expect("one sample per grid point");
    PulseAreas {
        eta: cumulative_integral(&wrap(eta_rate)),
        zeta: cumulative_integral(&wrap(zeta_rate)),
    }
}

/// Amplitudes γ_{m,j} of |m⟩|j incoming photons⟩ at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma<T> {
    pub z_0: Complex<T>,
    pub p1_1: Complex<T>,
    pub p1_2: Complex<T>,
    pub z_1: Complex<T>,
    pub m1_0: Complex<T>,
    /// Vacuum branch of a qutrit; never driven.
    pub p1_0: Complex<T>,
}

impl<T: Real> Gamma<T> {
    pub fn initial(c: &SuperpositionState<T>) -> Self {
        let zero = real(T::zero());
        Self {
            z_0: zero,
            p1_1: c.c_0,
            p1_2: c.c_m1,
            z_1: zero,
            m1_0: zero,
            p1_0: c.c_p1,
        }
    }

    /// ⟨ϱ_m⟩ = Σ_j |γ_{m,j}|² for m = −1, 0, +1.
    pub fn populations(&self) -> [T; 3] {
        [
            self.m1_0.norm_sqr(),
            self.z_0.norm_sqr() + self.z_1.norm_sqr(),
            self.p1_0.norm_sqr() + self.p1_1.norm_sqr() + self.p1_2.norm_sqr(),
        ]
    }

    /// (|γ₀,₀|² + |γ₊₁,₁|², |γ₊₁,₂|² + |γ₀,₁|² + |γ₋₁,₀|²)
    pub fn block_norms(&self) -> (T, T) {
        (
            self.z_0.norm_sqr() + self.p1_1.norm_sqr(),
            self.p1_2.norm_sqr() + self.z_1.norm_sqr() + self.m1_0.norm_sqr(),
        )
    }

    pub fn as_array(&self) -> [Complex<T>; 6] {
        [self.z_0, self.p1_1, self.p1_2, self.z_1, self.m1_0, self.p1_0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverTrajectory<T> {
    pub grid: TimeGrid<T>,
    pub eta: SampledFunction<T>,
    pub zeta: SampledFunction<T>,
    pub gamma: Vec<Gamma<T>>,
}

impl<T: Real> ReceiverTrajectory<T> {
    pub fn populations(&self) -> Vec<[T; 3]> {
        self.gamma.iter().map(Gamma::populations).collect()
    }

    /// Largest deviation of the two block norms from |c₀|² and |c₋₁|².
    pub fn block_norm_errors(&self, c: &SuperpositionState<T>) -> (T, T) {
        let [a, b, _] = c.populations();
        self.gamma.iter().fold((T::zero(), T::zero()), |(m1, m2), g| {
            let (n1, n2) = g.block_norms();
            (m1.max((n1 - b).abs()), m2.max((n2 - a).abs()))
        })
    }

    pub fn max_deviation(&self, other: &Self) -> T {
        let mut m = T::zero();
        for (a, b) in self.gamma.iter().zip(&other.gamma) {
            for (x, y) in a.as_array().iter().zip(b.as_array().iter()) {
                m = m.max((*x - *y).norm());
            }
        }
        m
    }

    pub fn last(&self) -> &Gamma<T> {
        self.gamma.last().expect("non-empty trajectory")
    }
}

fn is_quarter_turn<T: Real>(phi2: T) -> bool {
    let tau = T::TAU();
    let r = (phi2 - T::FRAC_PI_2()) % tau;
    let r = if r < T::zero() { r + tau } else { r };
    r.min(tau - r) <= T::tol_floor(1e-12)
}

/// Closed-form amplitudes for φ₂ = π/2:
///
/// ```text
/// γ₀,₀ = c₀ sin(η/2)            γ₊₁,₁ = c₀ cos(η/2)
/// γ₊₁,₂ = c₋₁(1 + cos ζ)/2      γ₀,₁ = c₋₁ sin ζ/√2      γ₋₁,₀ = c₋₁(1 − cos ζ)/2
/// ```
pub fn gamma_analytic<T: Real>(
    areas: &PulseAreas<T>,
    c: &SuperpositionState<T>,
    phi2: T,
) -> Result<ReceiverTrajectory<T>, ModelError> {
    if !is_quarter_turn(phi2) {
        return Err(ModelError::AnalyticPhaseOnly {
            phi2: phi2.to_f64().unwrap_or(f64::NAN),
        });
    }
    let half = T::half();
    let gamma = areas
        .eta
        .samples()
        .iter()
        .zip(areas.zeta.samples())
        .map(|(&eta, &zeta)| {
            let (s, co) = (eta * half).sin_cos();
            let (sz, cz) = zeta.sin_cos();
            Gamma {
                z_0: c.c_0 * s,
                p1_1: c.c_0 * co,
                p1_2: c.c_m1 * ((T::one() + cz) * half),
                z_1: c.c_m1 * (sz * T::FRAC_1_SQRT_2()),
                m1_0: c.c_m1 * ((T::one() - cz) * half),
                p1_0: c.c_p1,
            }
        })
        .collect();
    Ok(ReceiverTrajectory {
        grid: *areas.eta.grid(),
        eta: areas.eta.clone(),
        zeta: areas.zeta.clone(),
        gamma,
    })
}

/// RK4 integration of the two coupled amplitude blocks in time, for any φ₂.
///
/// η and ζ are integrated alongside the amplitudes; the mode functions are
/// interpolated between grid points.
pub fn simulate_receiver_ode<T: Real>(
    pulse2: &PulseShape<T>,
    modes: &ModeFunctions<T>,
    g2: T,
    k: T,
    phi2: T,
    c: &SuperpositionState<T>,
) -> Result<ReceiverTrajectory<T>, ModelError> {
    let grid = *modes.grid();
    let pref = g2.abs() / k.sqrt();
    let i = cplx(T::zero(), T::one());
    let e_minus = Complex::from_polar(T::one(), -phi2);
    let e_plus = Complex::from_polar(T::one(), phi2);
    let half_i = i * T::half();
    let root_half_i = i * T::FRAC_1_SQRT_2();

    let g0 = Gamma::initial(c);
    // [γ₀,₀, γ₊₁,₁, γ₋₁,₀, γ₀,₁, γ₊₁,₂, η, ζ]
    let init = [
        g0.z_0,
        g0.p1_1,
        g0.m1_0,
        g0.z_1,
        g0.p1_2,
        real(T::zero()),
        real(T::zero()),
    ];
    let traj = integrate_ode(
        |t, y: &[Complex<T>; 7]| {
            let drive = pref * pulse2.eval(t).max(T::zero()).sqrt();
            let p1 = modes.phi1.eval(t);
            let p2 = modes.phi2.eval(t);
            let d_eta = T::two() * drive * p1;
            let d_zeta = drive * (p1 + p2);
            [
                half_i * e_minus * y[1] * d_eta,
                half_i * e_plus * y[0] * d_eta,
                root_half_i * e_minus * y[3] * d_zeta,
                root_half_i * (y[4] * e_minus + y[2] * e_plus) * d_zeta,
                root_half_i * e_plus * y[3] * d_zeta,
                real(d_eta),
                real(d_zeta),
            ]
        },
        init,
        &grid,
    )?;
    let mut eta = Vec::with_capacity(grid.len());
    let mut zeta = Vec::with_capacity(grid.len());
    let gamma = traj
        .samples()
        .iter()
        .map(|y| {
            eta.push(y[5].re);
            zeta.push(y[6].re);
            Gamma {
                z_0: y[0],
                p1_1: y[1],
                m1_0: y[2],
                z_1: y[3],
                p1_2: y[4],
                p1_0: c.c_p1,
            }
        })
        .collect();
    Ok(ReceiverTrajectory {
        grid,
        eta: SampledFunction::new(grid, eta)?,
        zeta: SampledFunction::new(grid, zeta)?,
        gamma,
    })
}

/// N₀(t) + 2N₋₁(t) − n_out(t) + F(t)/k, with N from the receiver populations.
pub fn conservation_check<T: Real>(
    traj: &ReceiverTrajectory<T>,
    n_out: &SampledFunction<T>,
    flux_total: &SampledFunction<T>,
    k: T,
) -> Result<SampledFunction<T>, ModelError> {
    if n_out.grid() != &traj.grid || flux_total.grid() != &traj.grid {
        return Err(crate::error::NumericsError::GridMismatch.into());
    }
    let residual = traj
        .gamma
        .iter()
        .zip(n_out.samples().iter().zip(flux_total.samples()))
        .map(|(g, (&n, &f))| {
            let [n_m1, n_0, _] = g.populations();
            n_0 + T::two() * n_m1 - n + f / k
        })
        .collect();
    Ok(SampledFunction::new(traj.grid, residual)?)
}

/// Receiving atom after the pulse, compared with the sender's input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalState<T> {
    pub state: SuperpositionState<T>,
    pub fidelity: T,
    /// 1 − (|γ₋₁,₀|² + |γ₀,₀|² + |γ₊₁,₀|²)
    pub leakage: T,
    pub leakage_warning: bool,
}

/// Reads γ₋₁,₀, γ₀,₀, γ₊₁,₀ at the end of the trajectory into a renormalized
/// state and computes |⟨ψ_in|ψ_out⟩|².
pub fn final_state<T: Real>(
    traj: &ReceiverTrajectory<T>,
    c_in: &SuperpositionState<T>,
    leakage_threshold: T,
) -> Result<FinalState<T>, ModelError> {
    let g = traj.last();
    let retained = g.m1_0.norm_sqr() + g.z_0.norm_sqr() + g.p1_0.norm_sqr();
    let state = SuperpositionState::normalized(g.m1_0, g.z_0, g.p1_0)?;
    let leakage = (T::one() - retained).max(T::zero());
    Ok(FinalState {
        state,
        fidelity: c_in.fidelity(&state),
        leakage,
        leakage_warning: leakage > leakage_threshold,
    })
}
