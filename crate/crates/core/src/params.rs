//! Physical parameters, derived rates and regime checks.
//!
//! All rates are angular frequencies in rad/s. Values quoted as "X MHz"
//! enter through [`mhz`], which applies the implicit 2π.

use num_complex::Complex;
use serde::Serialize;

use crate::error::ModelError;
use crate::scalar::Real;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass of a ⁸⁷Rb atom, kg.
pub const RB87_MASS: f64 = 1.443_160_648e-25;

/// D2 line of rubidium, m.
pub const RB87_D2_WAVELENGTH: f64 = 780.241e-9;

/// `x` MHz as an angular frequency, 2π·x·10⁶ rad/s.
pub fn mhz<T: Real>(x: T) -> T {
    T::TAU() * x * T::lit(1e6)
}

/// Inverse of [`mhz`].
pub fn to_mhz<T: Real>(omega: T) -> T {
    omega / (T::TAU() * T::lit(1e6))
}

/// Cavity, atom and laser constants of one node pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams<T> {
    /// Atom–cavity coupling.
    pub g: T,
    /// Cavity field decay rate.
    pub k: T,
    pub gamma_sp: T,
    /// Peak Rabi frequency of the sending control field.
    pub omega1: T,
    /// Peak Rabi frequency of the receiving control field.
    pub omega2: T,
    /// One-photon detuning, signed.
    pub delta: T,
    pub delta_b_ground: T,
    pub delta_b_excited: T,
    /// Phase of the receiving control field, rad.
    pub phi2: T,
    pub atom_mass: T,
    pub wavelength: T,
}

impl<T: Real> PhysicalParams<T> {
    /// ⁸⁷Rb on F=1 → F'=2 with (g, k, γ_sp, Ω₁, Δ) = 2π×(12, 3, 5.87, 10, 100) MHz,
    /// Δ_B^(F') = 2π×15 MHz and Ω₂ = Ω₁.
    ///
    /// The ground-state splitting Δ_B^(F) = 2π×10.5 MHz is |g_F| = 1/2 at the
    /// same 15 G field.
    pub fn rb87_reference() -> Self {
        Self {
            g: mhz(T::lit(12.0)),
            k: mhz(T::lit(3.0)),
            gamma_sp: mhz(T::lit(5.87)),
            omega1: mhz(T::lit(10.0)),
            omega2: mhz(T::lit(10.0)),
            delta: mhz(T::lit(100.0)),
            delta_b_ground: mhz(T::lit(10.5)),
            delta_b_excited: mhz(T::lit(15.0)),
            phi2: T::FRAC_PI_2(),
            atom_mass: T::lit(RB87_MASS),
            wavelength: T::lit(RB87_D2_WAVELENGTH),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |name: &'static str, v: T, ok: bool, reason: &'static str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    value: v.to_f64().unwrap_or(f64::NAN),
                    reason,
                })
            }
        };
        let zero = T::zero();
        check("g", self.g, self.g > zero, "must be > 0")?;
        check("k", self.k, self.k > zero, "must be > 0")?;
        check("gamma_sp", self.gamma_sp, self.gamma_sp > zero, "must be > 0")?;
        check("omega1", self.omega1, self.omega1 >= zero, "must be >= 0")?;
        check("omega2", self.omega2, self.omega2 >= zero, "must be >= 0")?;
        check("delta", self.delta, self.delta.abs() > zero, "|delta| must be > 0")?;
        check(
            "delta_b_ground",
            self.delta_b_ground,
            self.delta_b_ground > zero,
            "must be > 0",
        )?;
        check(
            "delta_b_excited",
            self.delta_b_excited,
            self.delta_b_excited > zero,
            "must be > 0",
        )?;
        check("phi2", self.phi2, true, "must be finite")?;
        check("atom_mass", self.atom_mass, self.atom_mass > zero, "must be > 0")?;
        check("wavelength", self.wavelength, self.wavelength > zero, "must be > 0")?;
        Ok(())
    }

    /// Effective Raman coupling g·Ω/|Δ| for a control field of peak Rabi frequency `omega`.
    pub fn raman_coupling(&self, omega: T) -> T {
        self.g * omega / self.delta.abs()
    }

    pub fn derive(&self) -> Result<DerivedQuantities<T>, ModelError> {
        self.validate()?;
        Ok(derive_unchecked(self))
    }
}

/// Rates that follow from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities<T> {
    pub g1: T,
    pub g2: T,
    /// Cavity photon generation rate 4G₁²/k.
    pub alpha1: T,
    /// Signal-to-noise ratio 4g²/(k·γ_sp).
    pub r_sn: T,
    /// Peak spontaneous decay rate (Ω₁/Δ)²·γ_sp induced by the sending pump.
    pub gamma1_peak: T,
    /// Recoil frequency ħk²/2m.
    pub omega_rec: T,
}

pub fn derive<T: Real>(params: &PhysicalParams<T>) -> Result<DerivedQuantities<T>, ModelError> {
    params.derive()
}

fn derive_unchecked<T: Real>(p: &PhysicalParams<T>) -> DerivedQuantities<T> {
    let four = T::lit(4.0);
    let g1 = p.raman_coupling(p.omega1);
    let g2 = p.raman_coupling(p.omega2);
    let k_photon = T::TAU() / p.wavelength;
    let ratio = p.omega1 / p.delta;
    DerivedQuantities {
        g1,
        g2,
        alpha1: four * g1 * g1 / p.k,
        r_sn: four * p.g * p.g / (p.k * p.gamma_sp),
        gamma1_peak: ratio * ratio * p.gamma_sp,
        omega_rec: T::lit(HBAR) * k_photon * k_photon / (T::two() * p.atom_mass),
    }
}

/// Complex amplitudes of the ground Zeeman sublevels m_F = −1, 0, +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionState<T> {
    pub c_m1: Complex<T>,
    pub c_0: Complex<T>,
    pub c_p1: Complex<T>,
}

impl<T: Real> SuperpositionState<T> {
    /// Rejects amplitudes whose squared norm differs from 1 by more than 1e-12.
    pub fn new(c_m1: Complex<T>, c_0: Complex<T>, c_p1: Complex<T>) -> Result<Self, ModelError> {
        let s = Self { c_m1, c_0, c_p1 };
        let n = s.norm_sqr();
        if !n.is_finite() || (n - T::one()).abs() > T::tol_floor(1e-12) {
            return Err(ModelError::NotNormalized {
                norm_sqr: n.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(s)
    }

    /// Qubit c₋₁|−1⟩ + c₀|0⟩.
    pub fn qubit(c_m1: Complex<T>, c_0: Complex<T>) -> Result<Self, ModelError> {
        Self::new(c_m1, c_0, Complex::new(T::zero(), T::zero()))
    }

    /// Real non-negative amplitudes from populations (p₋₁, p₀, p₊₁).
    pub fn from_populations(p_m1: T, p_0: T, p_p1: T) -> Result<Self, ModelError> {
        let amp = |p: T| Complex::new(p.max(T::zero()).sqrt(), T::zero());
        Self::new(amp(p_m1), amp(p_0), amp(p_p1))
    }

    /// Scales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(c_m1: Complex<T>, c_0: Complex<T>, c_p1: Complex<T>) -> Result<Self, ModelError> {
        let raw = Self { c_m1, c_0, c_p1 };
        let n = raw.norm_sqr();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(ModelError::NotNormalized {
                norm_sqr: n.to_f64().unwrap_or(f64::NAN),
            });
        }
        let s = T::one() / n.sqrt();
        Ok(Self {
            c_m1: c_m1 * s,
            c_0: c_0 * s,
            c_p1: c_p1 * s,
        })
    }

    pub fn norm_sqr(&self) -> T {
        self.c_m1.norm_sqr() + self.c_0.norm_sqr() + self.c_p1.norm_sqr()
    }

    /// (|c₋₁|², |c₀|², |c₊₁|²)
    pub fn populations(&self) -> [T; 3] {
        [self.c_m1.norm_sqr(), self.c_0.norm_sqr(), self.c_p1.norm_sqr()]
    }

    pub fn is_qubit(&self) -> bool {
        self.c_p1 == Complex::new(T::zero(), T::zero())
    }

    pub fn with_global_phase(&self, chi: T) -> Self {
        let ph = Complex::from_polar(T::one(), chi);
        Self {
            c_m1: self.c_m1 * ph,
            c_0: self.c_0 * ph,
            c_p1: self.c_p1 * ph,
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.c_m1.conj() * other.c_m1 + self.c_0.conj() * other.c_0 + self.c_p1.conj() * other.c_p1
    }

    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }
}

/// Minimum ratio used to decide each "much greater than" relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds<T> {
    pub min_ratio: T,
}

impl<T: Real> Default for RegimeThresholds<T> {
    fn default() -> Self {
        Self {
            min_ratio: T::lit(5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck<T> {
    pub name: &'static str,
    pub relation: &'static str,
    pub left: T,
    pub right: T,
    pub ratio: T,
    pub min_ratio: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport<T> {
    pub checks: Vec<RegimeCheck<T>>,
}

impl<T: Real> RegimeReport<T> {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RegimeCheck<T>> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&RegimeCheck<T>> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Evaluates every inequality the closed-form model relies on.
///
/// `pulse_duration` is the sending pulse duration T₁ (s), used for the
/// adiabatic condition k·T₁ ≫ 1. Failures are reported, never returned as errors.
pub fn validate_regime<T: Real>(
    params: &PhysicalParams<T>,
    derived: &DerivedQuantities<T>,
    pulse_duration: T,
    thresholds: &RegimeThresholds<T>,
) -> RegimeReport<T> {
    let delta = params.delta.abs();
    let zeeman = params.delta_b_ground.max(params.delta_b_excited);
    let one = T::one();
    let rows: [(&'static str, &'static str, T, T); 9] = [
        ("delta_over_k", "|Δ| ≫ k", delta, params.k),
        ("delta_over_gamma_sp", "|Δ| ≫ γ_sp", delta, params.gamma_sp),
        ("delta_over_omega1", "|Δ| ≫ Ω₁", delta, params.omega1),
        ("delta_over_zeeman", "|Δ| ≫ Δ_B", delta, zeeman),
        ("k_over_g1", "k ≫ G₁", params.k, derived.g1),
        ("zeeman_ground_over_k", "Δ_B^(F) ≫ k", params.delta_b_ground, params.k),
        ("adiabatic_k_t1", "k·T₁ ≫ 1", params.k * pulse_duration, one),
        ("signal_to_noise", "R_sn ≫ 1", derived.r_sn, one),
        ("g1_over_recoil", "G₁ ≫ ω_rec", derived.g1, derived.omega_rec),
    ];
    let checks = rows
        .into_iter()
        .map(|(name, relation, left, right)| {
            let ratio = if right > T::zero() {
                left / right
            } else {
                T::infinity()
            };
            RegimeCheck {
                name,
                relation,
                left,
                right,
                ratio,
                min_ratio: thresholds.min_ratio,
                pass: ratio >= thresholds.min_ratio,
            }
        })
        .collect();
    RegimeReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PhysicalParams<f64> {
        PhysicalParams::rb87_reference()
    }

    #[test]
    fn signal_to_noise_of_reference_parameters() {
        let d = reference().derive().unwrap();
        let expected = 4.0 * 144.0 / (3.0 * 5.87);
        assert!((d.r_sn - expected).abs() < 1e-12);
        assert!((d.r_sn - 32.7).abs() < 0.1);
    }

    #[test]
    fn raman_coupling_is_1_2_mhz() {
        let d = reference().derive().unwrap();
        assert!((to_mhz(d.g1) - 1.2).abs() < 1e-12);
        assert!((d.alpha1 - 4.0 * d.g1 * d.g1 / reference().k).abs() == 0.0);
    }

    #[test]
    fn zero_drive_gives_zero_rates() {
        let mut p = reference();
        p.omega1 = 0.0;
        let d = p.derive().unwrap();
        assert_eq!(d.g1, 0.0);
        assert_eq!(d.alpha1, 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut p = reference();
        p.k = 0.0;
        assert!(matches!(
            p.derive(),
            Err(ModelError::InvalidParameter { name: "k", .. })
        ));
        let mut p = reference();
        p.delta = 0.0;
        assert!(p.derive().is_err());
        let mut p = reference();
        p.delta = -p.delta;
        assert!(p.derive().is_ok());
    }

    #[test]
    fn recoil_frequency_is_a_few_khz() {
        let d = reference().derive().unwrap();
        let khz = d.omega_rec / std::f64::consts::TAU / 1e3;
        assert!((3.0..4.5).contains(&khz), "{khz}");
    }

    #[test]
    fn regime_report_lists_each_check_once() {
        let p = reference();
        let d = p.derive().unwrap();
        let r = validate_regime(&p, &d, 0.3e-6, &RegimeThresholds::default());
        assert_eq!(r.checks.len(), 9);
        let mut names: Vec<_> = r.checks.iter().map(|c| c.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 9);

        let kt = r.get("adiabatic_k_t1").unwrap();
        assert!((kt.ratio - 5.654_866_776_461_628).abs() < 1e-9);
        assert!(kt.pass);
        let rsn = r.get("signal_to_noise").unwrap();
        assert!(rsn.pass && (rsn.ratio - 32.7).abs() < 0.1);
        // G1 = 1.2 MHz is only 2.5x below k
        assert!(!r.get("k_over_g1").unwrap().pass);
    }

    #[test]
    fn zeeman_equal_to_k_fails() {
        let mut p = reference();
        p.delta_b_ground = p.k;
        let d = p.derive().unwrap();
        let r = validate_regime(&p, &d, 0.3e-6, &RegimeThresholds::default());
        assert!(!r.get("zeeman_ground_over_k").unwrap().pass);
        assert!(!r.all_pass());
    }

    #[test]
    fn state_normalization_enforced() {
        let one = Complex::new(1.0f64, 0.0);
        let zero = Complex::new(0.0, 0.0);
        assert!(SuperpositionState::new(one, one, zero).is_err());
        let s = SuperpositionState::normalized(one, one, zero).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(SuperpositionState::normalized(zero, zero, zero).is_err());
        let q = SuperpositionState::from_populations(0.7f64, 0.3, 0.0).unwrap();
        assert!(q.is_qubit());
        assert!((q.fidelity(&q.with_global_phase(1.3)) - 1.0).abs() < 1e-15);
    }
}
