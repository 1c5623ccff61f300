//! Output field of the sending cavity: photon-number distribution, fluxes,
//! temporal mode functions Φ₁, Φ₂, mean photon number and g²(t, τ = 0).
//!
//! The two-photon component is the two-mode state |1_Φ₁, 1_Φ₂⟩ and the
//! output operator is a_out(t) = Φ₁(t) b₁ + Φ₂(t) b₂ with independent
//! bosonic b₁, b₂. Mode functions are real and non-negative.

use crate::error::ModelError;
use crate::numerics::{trapezoid, SampledFunction, TimeGrid};
use crate::params::SuperpositionState;
use crate::pulse::PulseShape;
use crate::scalar::Real;
use crate::sender::{two_photon_weight, Beta, SenderTrajectory};

/// P_j(t) = Σ_m |β_{m,j}(t)|² for j = 0, 1, 2.
pub fn photon_distribution<T: Real>(beta: &[Beta<T>]) -> [Vec<T>; 3] {
    let mut out = [
        Vec::with_capacity(beta.len()),
        Vec::with_capacity(beta.len()),
        Vec::with_capacity(beta.len()),
    ];
    for b in beta {
        let p = b.photon_probabilities();
        for j in 0..3 {
            out[j].push(p[j]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunctions<T> {
    /// |Φ₁|² = α₁f₁e^{−ϑ}, photons/s.
    pub phi1: SampledFunction<T>,
    /// |Φ₂|² = α₁f₁ϑe^{−ϑ}, photons/s.
    pub phi2: SampledFunction<T>,
}

impl<T: Real> ModeFunctions<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        self.phi1.grid()
    }

    /// (‖Φ₁‖², ‖Φ₂‖²) by trapezoidal quadrature.
    pub fn norms_sqr(&self) -> (T, T) {
        let h = self.grid().step();
        let sq = |f: &SampledFunction<T>| -> Vec<T> { f.samples().iter().map(|v| *v * *v).collect() };
        (trapezoid(h, &sq(&self.phi1)), trapezoid(h, &sq(&self.phi2)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fluxes<T> {
    /// α₁f₁(1 − ⟨σ₊₁⟩)
    pub total: SampledFunction<T>,
    /// First-photon flux (|c₋₁|² + |c₀|²)|Φ₁|².
    pub first: SampledFunction<T>,
    /// Second-photon flux |c₋₁|²|Φ₂|².
    pub second: SampledFunction<T>,
    pub modes: ModeFunctions<T>,
}

/// Photon fluxes and mode functions on the grid of `theta`.
///
/// For a qubit input the first-photon flux is |Φ₁|² itself; a c₊₁ component
/// emits nothing and scales it by 1 − |c₊₁|².
pub fn fluxes_and_modes<T: Real>(
    theta: &SampledFunction<T>,
    pulse: &PulseShape<T>,
    alpha1: T,
    c: &SuperpositionState<T>,
) -> Fluxes<T> {
    let grid = *theta.grid();
    let [a, b, _] = c.populations();
    let n = grid.len();
    let mut total = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    let mut phi1 = Vec::with_capacity(n);
    let mut phi2 = Vec::with_capacity(n);
    for (t, &th) in grid.iter().zip(theta.samples()) {
        let rate = alpha1 * pulse.eval(t);
        let e = (-th).exp();
        let emitting = a * e + (b + a * th) * e;
        let p1_sq = rate * e;
        let p2_sq = rate * th * e;
        total.push(rate * emitting);
        first.push((a + b) * p1_sq);
        second.push(a * p2_sq);
        phi1.push(p1_sq.max(T::zero()).sqrt());
        phi2.push(p2_sq.max(T::zero()).sqrt());
    }
    let wrap = |v| SampledFunction::new(grid, v).expect("one sample per grid point");
    Fluxes {
        total: wrap(total),
        first: wrap(first),
        second: wrap(second),
        modes: ModeFunctions {
            phi1: wrap(phi1),
            phi2: wrap(phi2),
        },
    }
}

/// Mean number of photons emitted up to t,
/// (2|c₋₁|² + |c₀|²)(1 − e^{−ϑ}) − |c₋₁|²ϑe^{−ϑ}.
pub fn mean_photon_number<T: Real>(theta: &SampledFunction<T>, c: &SuperpositionState<T>) -> SampledFunction<T> {
    let [a, b, _] = c.populations();
    let weight = T::two() * a + b;
    theta.map(|&th| weight * (-(-th).exp_m1()) - a * th * (-th).exp())
}

/// Zero-delay second-order correlation per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Trace<T> {
    pub values: Vec<T>,
    /// False where ⟨a†a⟩ = 0 and the ratio is undefined (value reported as 0).
    pub defined: Vec<bool>,
}

/// g²(t) = ⟨a†²a²⟩/⟨a†a⟩² for the superposition of |1_Φ₁,1_Φ₂⟩, |1_Φ₁⟩ and vacuum:
///
/// ```text
/// ⟨a†²a²⟩ = 4|c₋₁|²Φ₁²Φ₂²,   ⟨a†a⟩ = (|c₋₁|² + |c₀|²)Φ₁² + |c₋₁|²Φ₂²
/// ```
pub fn g2_zero_delay<T: Real>(modes: &ModeFunctions<T>, c: &SuperpositionState<T>) -> G2Trace<T> {
    let [a, b, _] = c.populations();
    let emit = a + b;
    let mut values = Vec::with_capacity(modes.phi1.samples().len());
    let mut defined = Vec::with_capacity(values.capacity());
    for (&p1, &p2) in modes.phi1.samples().iter().zip(modes.phi2.samples()) {
        let x = emit * p1 * p1;
        let y = a * p2 * p2;
        let s = x + y;
        if !(s > T::zero()) || !(emit > T::zero()) {
            values.push(T::zero());
            defined.push(false);
            continue;
        }
        // 4aΦ₁²Φ₂²/s² written as 4(x/s)(y/s)/emit to avoid underflow in the tails
        let (u, v) = (x / s, y / s);
        values.push(T::lit(4.0) * u * v / emit);
        defined.push(true);
    }
    G2Trace { values, defined }
}

/// ∫Φ₁Φ₂ dt / (‖Φ₁‖‖Φ₂‖)
pub fn mode_overlap<T: Real>(phi1: &SampledFunction<T>, phi2: &SampledFunction<T>) -> Result<T, ModelError> {
    let h = phi1.grid().step();
    let prod = phi1.zip_with(phi2, |a, b| *a * *b)?;
    let n1 = trapezoid(h, &phi1.samples().iter().map(|v| *v * *v).collect::<Vec<_>>());
    let n2 = trapezoid(h, &phi2.samples().iter().map(|v| *v * *v).collect::<Vec<_>>());
    if !(n1 > T::zero()) || !(n2 > T::zero()) {
        return Err(ModelError::ZeroNormMode);
    }
    Ok(trapezoid(h, prod.samples()) / (n1 * n2).sqrt())
}

/// Everything the output field exposes, on the sender grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonObservables<T> {
    pub grid: TimeGrid<T>,
    pub p0: Vec<T>,
    pub p1: Vec<T>,
    pub p2: Vec<T>,
    pub fluxes: Fluxes<T>,
    pub n_out: SampledFunction<T>,
    pub g2: G2Trace<T>,
    /// None when either mode vanishes identically.
    pub overlap: Option<T>,
}

impl<T: Real> PhotonObservables<T> {
    pub fn compute(
        traj: &SenderTrajectory<T>,
        pulse: &PulseShape<T>,
        alpha1: T,
        c: &SuperpositionState<T>,
    ) -> Self {
        let [p0, p1, p2] = photon_distribution(&traj.beta);
        let fluxes = fluxes_and_modes(&traj.theta, pulse, alpha1, c);
        let n_out = mean_photon_number(&traj.theta, c);
        let g2 = g2_zero_delay(&fluxes.modes, c);
        let overlap = mode_overlap(&fluxes.modes.phi1, &fluxes.modes.phi2).ok();
        Self {
            grid: traj.grid,
            p0,
            p1,
            p2,
            fluxes,
            n_out,
            g2,
            overlap,
        }
    }

    pub fn modes(&self) -> &ModeFunctions<T> {
        &self.fluxes.modes
    }
}

/// P₂ at pump area ϑ for two-photon weight |c₋₁|².
pub fn two_photon_probability<T: Real>(theta: T, pop_m1: T) -> T {
    pop_m1 * two_photon_weight(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;
    use crate::sender::theta;

    fn scenario(c: SuperpositionState<f64>) -> (SenderTrajectory<f64>, PhotonObservables<f64>) {
        let p = PhysicalParams::rb87_reference();
        let alpha1 = p.derive().unwrap().alpha1;
        let pulse = PulseShape::gaussian(0.0, 0.3e-6).unwrap();
        let grid = TimeGrid::centered(0.0, 1.8e-6, 48001).unwrap();
        let traj = SenderTrajectory::closed_form(theta(&pulse, alpha1, &grid), &c);
        let obs = PhotonObservables::compute(&traj, &pulse, alpha1, &c);
        (traj, obs)
    }

    fn qubit() -> SuperpositionState<f64> {
        SuperpositionState::from_populations(0.7, 0.3, 0.0).unwrap()
    }

    #[test]
    fn end_distribution() {
        let (traj, obs) = scenario(qubit());
        let th = traj.theta_final();
        let p2 = 0.7 * (1.0 - (1.0 + th) * (-th).exp());
        let p1 = 0.3 * (1.0 - (-th).exp()) + 0.7 * th * (-th).exp();
        assert!((obs.p2.last().unwrap() - p2).abs() < 1e-12);
        assert!((obs.p1.last().unwrap() - p1).abs() < 1e-12);
        assert!((obs.p2.last().unwrap() - 0.691).abs() < 1e-3);
        assert!((obs.p1.last().unwrap() - 0.307).abs() < 1e-3);
        assert!((obs.p0[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_two_photon_branch_without_c_m1() {
        let (_, obs) = scenario(SuperpositionState::from_populations(0.0, 1.0, 0.0).unwrap());
        assert!(obs.p2.iter().all(|&v| v == 0.0));
        assert!(obs.g2.values.iter().all(|&v| v == 0.0));
        assert!(obs.fluxes.second.samples().iter().all(|&v| v == 0.0));
        let th = obs.n_out.last();
        assert!((th - (1.0 - (-6.414_713_852f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn first_mode_norm() {
        let (traj, obs) = scenario(qubit());
        let (n1, n2) = obs.modes().norms_sqr();
        let th = traj.theta_final();
        assert!((n1 - (1.0 - (-th).exp())).abs() < 1e-7, "n1 = {n1}, theta = {th}");
        assert!((n1 - 0.9984).abs() < 1e-4);
        assert!((n2 - two_photon_weight(th)).abs() < 1e-8);
    }

    #[test]
    fn second_photon_peaks_later() {
        let (_, obs) = scenario(qubit());
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .fold((0, f64::MIN), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
                .0
        };
        assert!(argmax(obs.fluxes.second.samples()) > argmax(obs.fluxes.first.samples()));
    }

    #[test]
    fn mean_number_and_small_theta() {
        let (traj, obs) = scenario(qubit());
        let th = traj.theta_final();
        let expect = 1.7 * (1.0 - (-th).exp()) - 0.7 * th * (-th).exp();
        assert!((obs.n_out.last() - expect).abs() < 1e-12);
        assert!((obs.n_out.last() - 1.690).abs() < 1e-3);
        for (&t, &n) in traj.theta.samples().iter().zip(obs.n_out.samples()) {
            if t > 1e-6 && t <= 0.1 {
                assert!(((n - t) / t).abs() < 0.05);
            }
        }
    }

    #[test]
    fn g2_bounded_and_one_at_balance() {
        let (_, obs) = scenario(qubit());
        assert!(obs.g2.values.iter().all(|&g| (0.0..=1.0 + 1e-12).contains(&g)));
        let grid = TimeGrid::uniform(0.0, 1.0, 2).unwrap();
        let c = qubit();
        let modes = ModeFunctions {
            phi1: SampledFunction::new(grid, vec![0.0, 0.7f64.sqrt()]).unwrap(),
            phi2: SampledFunction::new(grid, vec![0.0, 1.0]).unwrap(),
        };
        let g2 = g2_zero_delay(&modes, &c);
        assert!(!g2.defined[0] && g2.values[0] == 0.0);
        assert!((g2.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn overlap_edge_cases() {
        let grid = TimeGrid::uniform(0.0, 3.0, 4).unwrap();
        let a = SampledFunction::new(grid, vec![1.0f64, 1.0, 0.0, 0.0]).unwrap();
        let b = SampledFunction::new(grid, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(mode_overlap(&a, &b).unwrap(), 0.0);
        assert!((mode_overlap(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let z = SampledFunction::new(grid, vec![0.0; 4]).unwrap();
        assert!(matches!(mode_overlap(&a, &z), Err(ModelError::ZeroNormMode)));
    }

    #[test]
    fn overlap_near_gamma_three_halves() {
        let (traj, obs) = scenario(qubit());
        let th = traj.theta_final();
        // ∫₀^ϑ∞ √x e^{-x} dx / sqrt((1 - e^{-ϑ∞})(1 - (1+ϑ∞)e^{-ϑ∞})), by composite Simpson
        let n = 200_000;
        let h = th / n as f64;
        let g = |x: f64| x.sqrt() * (-x).exp();
        let mut s = g(0.0) + g(th);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let num = s * h / 3.0;
        let expected = num / ((1.0 - (-th).exp()) * two_photon_weight(th)).sqrt();
        let got = obs.overlap.unwrap();
        assert!((got - expected).abs() < 1e-5, "{got} vs {expected}");
        assert!((got - 0.886).abs() < 0.01);
    }
}
