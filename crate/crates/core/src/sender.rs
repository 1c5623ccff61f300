//! Sending node: pump area ϑ(t), Zeeman populations and coherences, and the
//! atom–photon amplitudes β.
//!
//! The closed forms depend on the pulse only through
//!
//! ```text
//! ϑ(t) = α₁ ∫_{-∞}^{t} f₁(t') dt'
//! ```
//!
//! [`simulate_sender_ode`] integrates the rate equations directly in time and
//! is kept as an independent check of the closed forms.

use num_complex::Complex;

use crate::error::ModelError;
use crate::numerics::{cumulative_integral, integrate_ode, SampledFunction, TimeGrid};
use crate::params::{PhysicalParams, SuperpositionState};
use crate::pulse::PulseShape;
use crate::scalar::{real, Real};

/// ϑ(t) = α₁ · ∫ f₁ on the grid. The grid start stands in for −∞.
pub fn theta<T: Real>(pulse: &PulseShape<T>, alpha1: T, grid: &TimeGrid<T>) -> SampledFunction<T> {
    cumulative_integral(&pulse.sample(grid)).map(|v| alpha1 * *v)
}

/// Ground-state populations ⟨σ_m⟩ and coherences ⟨σ_{m,m'}⟩ = c_m* c_m' (initially).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPopulations<T> {
    pub grid: TimeGrid<T>,
    /// (⟨σ₋₁⟩, ⟨σ₀⟩, ⟨σ₊₁⟩) per grid point.
    pub sigma: Vec<[T; 3]>,
    /// (⟨σ₋₁,₀⟩, ⟨σ₀,₊₁⟩, ⟨σ₋₁,₊₁⟩) per grid point.
    pub coherence: Vec<[Complex<T>; 3]>,
}

impl<T: Real> AtomicPopulations<T> {
    /// Largest |difference| over every population and coherence component.
    pub fn max_deviation(&self, other: &Self) -> T {
        let mut m = T::zero();
        for (a, b) in self.sigma.iter().zip(&other.sigma) {
            for j in 0..3 {
                m = m.max((a[j] - b[j]).abs());
            }
        }
        for (a, b) in self.coherence.iter().zip(&other.coherence) {
            for j in 0..3 {
                m = m.max((a[j] - b[j]).norm());
            }
        }
        m
    }

    /// max_t |Σ_m ⟨σ_m(t)⟩ − 1|
    pub fn conservation_error(&self) -> T {
        self.sigma.iter().fold(T::zero(), |m, s| {
            m.max((s[0] + s[1] + s[2] - T::one()).abs())
        })
    }
}

/// Closed-form populations and coherences as functions of ϑ.
///
/// For a qutrit input the m = −1 and m = 0 populations are unchanged and
/// ⟨σ₊₁⟩ = 1 − ⟨σ₋₁⟩ − ⟨σ₀⟩. The coherences with m' = +1 pick up the
/// decaying initial value c_m* c₊₁ e^{−ϑ/2}.
pub fn populations_analytic<T: Real>(
    theta: &SampledFunction<T>,
    c: &SuperpositionState<T>,
) -> AtomicPopulations<T> {
    let [a, b, _] = c.populations();
    let two = T::two();
    let c_m1_0 = c.c_m1.conj() * c.c_0;
    let c_0_p1 = c.c_0.conj() * c.c_p1;
    let c_m1_p1 = c.c_m1.conj() * c.c_p1;

    let n = theta.samples().len();
    let mut sigma = Vec::with_capacity(n);
    let mut coherence = Vec::with_capacity(n);
    for &th in theta.samples() {
        let e = (-th).exp();
        let e_half = (-th * T::half()).exp();
        let s_m1 = a * e;
        let s_0 = (b + a * th) * e;
        sigma.push([s_m1, s_0, T::one() - s_m1 - s_0]);
        coherence.push([
            c_m1_0 * e,
            c_m1_0 * (two * (e_half - e)) + c_0_p1 * e_half,
            c_m1_p1 * e_half,
        ]);
    }
    AtomicPopulations {
        grid: *theta.grid(),
        sigma,
        coherence,
    }
}

/// Amplitudes β_{m,j} of |m⟩|j photons⟩ at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta<T> {
    pub m1_0: Complex<T>,
    pub z_0: Complex<T>,
    pub z_1: Complex<T>,
    pub p1_0: Complex<T>,
    pub p1_1: Complex<T>,
    pub p1_2: Complex<T>,
}

impl<T: Real> Beta<T> {
    pub fn norm_sqr(&self) -> T {
        self.as_array().iter().fold(T::zero(), |s, z| s + z.norm_sqr())
    }

    /// (β₋₁,₀, β₀,₀, β₀,₁, β₊₁,₀, β₊₁,₁, β₊₁,₂)
    pub fn as_array(&self) -> [Complex<T>; 6] {
        [self.m1_0, self.z_0, self.z_1, self.p1_0, self.p1_1, self.p1_2]
    }

    /// Σ_j |β_{m,j}|² for m = −1, 0, +1.
    pub fn atomic_populations(&self) -> [T; 3] {
        [
            self.m1_0.norm_sqr(),
            self.z_0.norm_sqr() + self.z_1.norm_sqr(),
            self.p1_0.norm_sqr() + self.p1_1.norm_sqr() + self.p1_2.norm_sqr(),
        ]
    }

    /// Σ_m |β_{m,j}|² for j = 0, 1, 2.
    pub fn photon_probabilities(&self) -> [T; 3] {
        [
            self.m1_0.norm_sqr() + self.z_0.norm_sqr() + self.p1_0.norm_sqr(),
            self.z_1.norm_sqr() + self.p1_1.norm_sqr(),
            self.p1_2.norm_sqr(),
        ]
    }
}

/// 1 − (1 + ϑ)e^{−ϑ}, computed without cancellation at small ϑ.
pub(crate) fn two_photon_weight<T: Real>(th: T) -> T {
    (-(-th).exp_m1() - th * (-th).exp()).max(T::zero())
}

/// β_{m,j}(ϑ) for every sample of ϑ. The m = +1, j = 0 branch carries c₊₁ unchanged.
pub fn amplitudes_beta<T: Real>(theta: &SampledFunction<T>, c: &SuperpositionState<T>) -> Vec<Beta<T>> {
    theta
        .samples()
        .iter()
        .map(|&th| {
            let e = (-th).exp();
            let e_half = (-th * T::half()).exp();
            Beta {
                m1_0: c.c_m1 * e_half,
                z_0: c.c_0 * e_half,
                z_1: c.c_m1 * (th * e).max(T::zero()).sqrt(),
                p1_0: c.c_p1,
                p1_1: c.c_0 * (-(-th).exp_m1()).max(T::zero()).sqrt(),
                p1_2: c.c_m1 * two_photon_weight(th).sqrt(),
            }
        })
        .collect()
}

/// Closed-form sending-node trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderTrajectory<T> {
    pub grid: TimeGrid<T>,
    pub theta: SampledFunction<T>,
    pub populations: AtomicPopulations<T>,
    pub beta: Vec<Beta<T>>,
}

impl<T: Real> SenderTrajectory<T> {
    pub fn closed_form(theta: SampledFunction<T>, c: &SuperpositionState<T>) -> Self {
        let populations = populations_analytic(&theta, c);
        let beta = amplitudes_beta(&theta, c);
        Self {
            grid: *theta.grid(),
            theta,
            populations,
            beta,
        }
    }

    pub fn theta_final(&self) -> T {
        *self.theta.last()
    }
}

/// Heaviside step with θ(0) = 1, the value for which the rate equations
/// reproduce the closed forms.
fn step<T: Real>(m: i32) -> T {
    if m >= 0 {
        T::one()
    } else {
        T::zero()
    }
}

const COHERENCE_PAIRS: [(i32, i32); 3] = [(-1, 0), (0, 1), (-1, 1)];

/// State layout: [σ₋₁, σ₀, σ₊₁, σ₋₁,₀, σ₀,₊₁, σ₋₁,₊₁].
fn rate_equations<T: Real>(rate: T, y: &[Complex<T>; 6]) -> [Complex<T>; 6] {
    let pop = |m: i32| -> Complex<T> {
        if (-1..=1).contains(&m) {
            y[(m + 1) as usize]
        } else {
            real(T::zero())
        }
    };
    let coh = |m: i32, mp: i32| -> Complex<T> {
        for (idx, &(a, b)) in COHERENCE_PAIRS.iter().enumerate() {
            if (a, b) == (m, mp) {
                return y[3 + idx];
            }
            if (b, a) == (m, mp) {
                return y[3 + idx].conj();
            }
        }
        real(T::zero())
    };
    let mut dy = [real(T::zero()); 6];
    for m in -1..=1 {
        dy[(m + 1) as usize] = (pop(m - 1) * step::<T>(m) - pop(m) * step::<T>(-m)) * rate;
    }
    for (idx, &(m, mp)) in COHERENCE_PAIRS.iter().enumerate() {
        let loss = coh(m, mp) * (step::<T>(-m) + step::<T>(-mp));
        let feed = coh(m - 1, mp - 1) * (T::two() * step::<T>(m) * step::<T>(mp));
        dy[3 + idx] = (loss - feed) * (-T::half() * rate);
    }
    dy
}

/// Integrates the population/coherence rate equations in time with RK4,
/// starting from the product state of `c` with the cavity in vacuum.
pub fn simulate_sender_ode<T: Real>(
    params: &PhysicalParams<T>,
    pulse: &PulseShape<T>,
    c: &SuperpositionState<T>,
    grid: &TimeGrid<T>,
) -> Result<AtomicPopulations<T>, ModelError> {
    let alpha1 = params.derive()?.alpha1;
    let [a, b, p] = c.populations();
    let init = [
        real(a),
        real(b),
        real(p),
        c.c_m1.conj() * c.c_0,
        c.c_0.conj() * c.c_p1,
        c.c_m1.conj() * c.c_p1,
    ];
    let traj = integrate_ode(
        |t, y| rate_equations(alpha1 * pulse.eval(t), y),
        init,
        grid,
    )?;
    let (sigma, coherence) = traj
        .samples()
        .iter()
        .map(|y| ([y[0].re, y[1].re, y[2].re], [y[3], y[4], y[5]]))
        .unzip();
    Ok(AtomicPopulations {
        grid: *grid,
        sigma,
        coherence,
    })
}
