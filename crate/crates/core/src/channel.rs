//! Fiber link budget between the two nodes.

use serde::Serialize;

use crate::error::ModelError;
use crate::params::SuperpositionState;
use crate::scalar::Real;

/// Attenuation length (km) for a loss of `db_per_km`: 10 / (α_dB · ln 10).
pub fn attenuation_length<T: Real>(db_per_km: T) -> Result<T, ModelError> {
    if !(db_per_km > T::zero()) || !db_per_km.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "atten_db_per_km",
            value: db_per_km.to_f64().unwrap_or(f64::NAN),
            reason: "must be finite and > 0",
        });
    }
    Ok(T::lit(10.0) / (db_per_km * T::LN_10()))
}

/// exp(−j·L₀/L_att), the probability that all `photons` survive the link.
///
/// Built as a j-fold product of the one-photon factor so that η₂ = η₁² holds
/// bit for bit.
pub fn transmission_efficiency<T: Real>(l0_km: T, l_att_km: T, photons: u32) -> T {
    let one = (-l0_km / l_att_km).exp();
    (0..photons).fold(T::one(), |acc, _| acc * one)
}

/// p_em · η_trans · p_abs
pub fn success_probability<T: Real>(p_em: T, eta_trans: T, p_abs: T) -> T {
    p_em * eta_trans * p_abs
}

/// Accumulated fiber phase rate·L₀ (rad).
pub fn phase_drift<T: Real>(l0_km: T, rate_rad_per_km: T) -> T {
    rate_rad_per_km * l0_km
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelModel<T> {
    pub l0_km: T,
    pub atten_db_per_km: T,
    pub l_att_km: T,
    pub phase_drift_rate: T,
}

impl<T: Real> ChannelModel<T> {
    pub fn new(l0_km: T, atten_db_per_km: T, phase_drift_rate: T) -> Result<Self, ModelError> {
        if !(l0_km >= T::zero()) || !l0_km.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "L0_km",
                value: l0_km.to_f64().unwrap_or(f64::NAN),
                reason: "must be finite and >= 0",
            });
        }
        if !(phase_drift_rate >= T::zero()) {
            return Err(ModelError::InvalidParameter {
                name: "phase_rate",
                value: phase_drift_rate.to_f64().unwrap_or(f64::NAN),
                reason: "must be >= 0",
            });
        }
        Ok(Self {
            l0_km,
            atten_db_per_km,
            l_att_km: attenuation_length(atten_db_per_km)?,
            phase_drift_rate,
        })
    }

    pub fn with_length(&self, l0_km: T) -> Result<Self, ModelError> {
        Self::new(l0_km, self.atten_db_per_km, self.phase_drift_rate)
    }

    pub fn efficiency(&self, photons: u32) -> T {
        transmission_efficiency(self.l0_km, self.l_att_km, photons)
    }

    pub fn phase_drift(&self) -> T {
        phase_drift(self.l0_km, self.phase_drift_rate)
    }
}

/// Emission and absorption probabilities assumed for every photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeEfficiencies<T> {
    pub p_em: T,
    pub p_abs: T,
}

impl<T: Real> Default for NodeEfficiencies<T> {
    fn default() -> Self {
        Self {
            p_em: T::one(),
            p_abs: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget<T> {
    pub eta1: T,
    pub eta2: T,
    pub success_one_photon: T,
    pub success_two_photon: T,
    /// |c₀|²·P₁ + |c₋₁|²·P₂ + |c₊₁|² (the vacuum branch always arrives).
    pub weighted_success: T,
    pub phase_drift_rad: T,
    pub phase_warning: bool,
}

/// Per-branch success probabilities and their population-weighted combination.
pub fn link_budget<T: Real>(
    channel: &ChannelModel<T>,
    nodes: &NodeEfficiencies<T>,
    c: &SuperpositionState<T>,
    phase_warn_rad: T,
) -> LinkBudget<T> {
    let eta1 = channel.efficiency(1);
    let eta2 = channel.efficiency(2);
    let s1 = success_probability(nodes.p_em, eta1, nodes.p_abs);
    let s2 = success_probability(nodes.p_em, eta2, nodes.p_abs);
    let [a, b, p] = c.populations();
    let drift = channel.phase_drift();
    LinkBudget {
        eta1,
        eta2,
        success_one_photon: s1,
        success_two_photon: s2,
        weighted_success: b * s1 + a * s2 + p,
        phase_drift_rad: drift,
        phase_warning: drift > phase_warn_rad,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferDiagnostics<T> {
    pub r_sn: T,
    /// 1/R_sn, the neglected relaxation infidelity scale.
    pub inverse_r_sn: T,
    pub mode_overlap: Option<T>,
    pub residual_eta: T,
    pub residual_zeta: T,
    pub leakage: T,
    pub leakage_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferReport<T> {
    pub fidelity: T,
    pub link: LinkBudget<T>,
    /// weighted_success × fidelity
    pub end_to_end_success: T,
    pub diagnostics: TransferDiagnostics<T>,
}

impl<T: Real> TransferReport<T> {
    pub fn new(fidelity: T, link: LinkBudget<T>, diagnostics: TransferDiagnostics<T>) -> Self {
        Self {
            fidelity,
            link,
            end_to_end_success: link.weighted_success * fidelity,
            diagnostics,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_report_is_fidelity() {
        let ch = ChannelModel::new(0.0f64, 2.0, 0.1).unwrap();
        let c = SuperpositionState::from_populations(0.5, 0.3, 0.2).unwrap();
        let link = link_budget(&ch, &NodeEfficiencies::default(), &c, 0.5);
        let diag = TransferDiagnostics {
            r_sn: 32.7,
            inverse_r_sn: 1.0 / 32.7,
            mode_overlap: None,
            residual_eta: 0.0,
            residual_zeta: 0.0,
            leakage: 0.0,
            leakage_warning: false,
        };
        let r = TransferReport::new(0.9995, link, diag);
        assert_eq!(r.end_to_end_success, 0.9995);
    }

    #[test]
    fn two_db_per_km() {
        let l = attenuation_length(2.0f64).unwrap();
        assert!((l - 2.171_472_409_516_259).abs() < 1e-12);
        assert!((attenuation_length(10.0 / std::f64::consts::LN_10).unwrap() - 1.0).abs() < 1e-15);
        assert!((attenuation_length(0.2f64).unwrap() - 21.714_724_095_162_59).abs() < 1e-10);
        assert!(attenuation_length(0.0).is_err());
        assert!(attenuation_length(-1.0).is_err());
    }

    #[test]
    fn efficiency_points() {
        assert_eq!(transmission_efficiency(0.0, 2.0, 1), 1.0);
        assert_eq!(transmission_efficiency(0.0, 2.0, 2), 1.0);
        assert!((transmission_efficiency(2.0, 2.0, 1) - (-1.0f64).exp()).abs() < 1e-15);
        let l = attenuation_length(2.0).unwrap();
        assert!((transmission_efficiency(0.06f64, l, 2) - 0.946).abs() < 5e-4);
    }

    #[test]
    fn weighted_success_at_60_m() {
        let ch = ChannelModel::new(0.06f64, 2.0, 0.1).unwrap();
        let c = SuperpositionState::from_populations(0.7, 0.3, 0.0).unwrap();
        let b = link_budget(&ch, &NodeEfficiencies::default(), &c, 0.5);
        assert!((b.weighted_success - 0.954).abs() < 1e-3);
        assert!(!b.phase_warning);
    }

    #[test]
    fn success_products() {
        assert_eq!(success_probability(1.0, 1.0, 1.0), 1.0);
        assert_eq!(success_probability(0.25, 1.0, 1.0), 0.25);
    }

    #[test]
    fn phase_drift_points() {
        assert!((phase_drift(1.0f64, 0.1) - 0.1).abs() < 1e-15);
        assert_eq!(phase_drift(0.0, 0.1), 0.0);
        let ch = ChannelModel::new(10.0f64, 2.0, 0.1).unwrap();
        let c = SuperpositionState::from_populations(0.7, 0.3, 0.0).unwrap();
        let b = link_budget(&ch, &NodeEfficiencies::default(), &c, 0.5);
        assert!((b.phase_drift_rad - 1.0).abs() < 1e-14);
        assert!(b.phase_warning);
    }
}
