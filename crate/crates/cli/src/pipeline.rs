//! send → solve → receive → channel, with the ODE oracles run alongside.

use serde::Serialize;
use thiserror::Error;

use pnss_core::receiver::{
    conservation_check, final_state, gamma_analytic, pulse_areas, simulate_receiver_ode,
    FinalState,
};
use pnss_core::sender::{simulate_sender_ode, theta, AtomicPopulations};
use pnss_core::{
    link_budget, solve_pulse_shape, to_mhz, validate_regime, DerivedQuantities, FreeVariables,
    ModelError, Params64, PhotonObservables, Pulse64, PulseSolveResult, Receiver64,
    RegimeReport, SampledFunction, Sender64, SolveError, State64, TimeGrid, TransferDiagnostics,
    TransferReport,
};

use crate::config::{ConfigError, Pulse2Mode, ScenarioConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model evaluation failed: {0}")]
    Model(#[from] ModelError),
    #[error("receiving pulse solve did not converge: {}", .0.message.as_deref().unwrap_or("unknown"))]
    NotConverged(Box<SolveSummary>),
}

/// A validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub sha256: String,
    pub params: Params64,
    pub derived: DerivedQuantities<f64>,
    pub state: State64,
    pub pulse1: Pulse64,
    pub grid: TimeGrid<f64>,
    pub regime: RegimeReport<f64>,
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, sha256: String) -> Result<Self, ConfigError> {
        let warnings = config.check()?;
        let params = config.physical_params()?;
        let derived = params
            .derive()
            .map_err(|e| ConfigError::Invalid {
                field: "params".into(),
                reason: e.to_string(),
            })?;
        let (state, _) = config.initial_state()?;
        let regime = validate_regime(&params, &derived, config.t1(), &config.thresholds()?);
        Ok(Self {
            params,
            derived,
            state,
            pulse1: config.sender_pulse()?,
            grid: config.time_grid()?,
            regime,
            warnings,
            sha256,
            config,
        })
    }

    /// k·t for every grid point.
    pub fn kt(&self, shift: f64) -> Vec<f64> {
        self.grid.iter().map(|t| self.params.k * (t + shift)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SendRun {
    pub trajectory: Sender64,
    pub photons: PhotonObservables<f64>,
    pub ode: AtomicPopulations<f64>,
    /// Max |closed form − ODE| over populations and coherences.
    pub ode_deviation: f64,
}

impl SendRun {
    /// Coherences reported for export: closed form for qubits, ODE for qutrits.
    pub fn exported_coherences(&self) -> (&AtomicPopulations<f64>, &'static str) {
        if self.trajectory.populations.sigma[0][2] == 0.0 && self.ode.sigma[0][2] == 0.0 {
            (&self.trajectory.populations, "closed_form")
        } else {
            (&self.ode, "ode")
        }
    }
}

pub fn send(s: &Scenario) -> Result<SendRun, PipelineError> {
    let alpha1 = s.derived.alpha1;
    let trajectory = Sender64::closed_form(theta(&s.pulse1, alpha1, &s.grid), &s.state);
    let photons = PhotonObservables::compute(&trajectory, &s.pulse1, alpha1, &s.state);
    let ode = simulate_sender_ode(&s.params, &s.pulse1, &s.state, &s.grid)?;
    let ode_deviation = ode.max_deviation(&trajectory.populations);
    Ok(SendRun {
        trajectory,
        photons,
        ode,
        ode_deviation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub mode: Pulse2Mode,
    pub requested: Option<FreeVariables>,
    pub used: Option<FreeVariables>,
    pub used_fallback: bool,
    pub converged: bool,
    /// Why the requested solve failed, if it did.
    pub message: Option<String>,
    pub omega2_mhz: f64,
    #[serde(rename = "T2_us")]
    pub t2_us: f64,
    pub t0_us: f64,
    pub residual_eta: f64,
    pub residual_zeta: f64,
    pub evaluations: usize,
}

impl SolveSummary {
    fn from_result(mode: Pulse2Mode, requested: FreeVariables, r: &PulseSolveResult<f64>) -> Self {
        Self {
            mode,
            requested: Some(requested),
            used: Some(r.free),
            used_fallback: r.free != requested,
            converged: true,
            message: None,
            omega2_mhz: to_mhz(r.amplitude),
            t2_us: r.width * 1e6,
            t0_us: r.center * 1e6,
            residual_eta: r.residual_eta,
            residual_zeta: r.residual_zeta,
            evaluations: r.iterations,
        }
    }

    fn failed(requested: FreeVariables, err: &SolveError<f64>, message: String) -> Self {
        let best = err.best();
        Self {
            mode: Pulse2Mode::Solve,
            requested: Some(requested),
            used: None,
            used_fallback: false,
            converged: false,
            message: Some(message),
            omega2_mhz: best.map_or(f64::NAN, |b| to_mhz(b.amplitude)),
            t2_us: best.map_or(f64::NAN, |b| b.width * 1e6),
            t0_us: best.map_or(f64::NAN, |b| b.center * 1e6),
            residual_eta: best.map_or(f64::NAN, |b| b.residual_eta),
            residual_zeta: best.map_or(f64::NAN, |b| b.residual_zeta),
            evaluations: match err {
                SolveError::NotConverged { iterations, .. } => *iterations,
                SolveError::Model(_) => 0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReceiveRun {
    pub pulse2: Pulse64,
    pub omega2: f64,
    pub solve: SolveSummary,
    pub trajectory: Receiver64,
    /// Max |analytic − ODE|; None when φ₂ ≠ π/2 and the ODE is the only path.
    pub ode_deviation: Option<f64>,
    pub block_norm_errors: (f64, f64),
    pub residual: SampledFunction<f64>,
    pub final_state: FinalState<f64>,
}

fn solve_pulse(s: &Scenario, send: &SendRun) -> Result<(Pulse64, f64, SolveSummary), PipelineError> {
    let modes = &send.photons.fluxes.modes;
    let requested = s.config.pulse2.free;
    let opts = s.config.solve_options(&s.params)?;
    let first = match solve_pulse_shape(modes, &s.params, &opts) {
        Ok(r) => return Ok((r.pulse(), r.amplitude, SolveSummary::from_result(Pulse2Mode::Solve, requested, &r))),
        Err(SolveError::Model(e)) => return Err(e.into()),
        Err(e) => e,
    };
    if !s.config.pulse2.fallback || requested == FreeVariables::WidthAndAmplitude {
        return Err(PipelineError::NotConverged(Box::new(SolveSummary::failed(
            requested,
            &first,
            first.to_string(),
        ))));
    }
    let opts = s
        .config
        .solve_options_for(FreeVariables::WidthAndAmplitude, &s.params)?;
    match solve_pulse_shape(modes, &s.params, &opts) {
        Ok(r) => {
            let mut summary = SolveSummary::from_result(Pulse2Mode::Solve, requested, &r);
            summary.message = Some(first.to_string());
            Ok((r.pulse(), r.amplitude, summary))
        }
        Err(SolveError::Model(e)) => Err(e.into()),
        Err(e) => {
            let msg = format!("{first}; fallback: {e}");
            Err(PipelineError::NotConverged(Box::new(SolveSummary::failed(requested, &e, msg))))
        }
    }
}

pub fn receive(s: &Scenario, send: &SendRun) -> Result<ReceiveRun, PipelineError> {
    let modes = &send.photons.fluxes.modes;
    let (pulse2, omega2, mut solve) = match s.config.pulse2.mode {
        Pulse2Mode::Solve => solve_pulse(s, send)?,
        Pulse2Mode::Explicit => {
            let pulse = s.config.explicit_receiver_pulse()?;
            let summary = SolveSummary {
                mode: Pulse2Mode::Explicit,
                requested: None,
                used: None,
                used_fallback: false,
                converged: true,
                message: None,
                omega2_mhz: to_mhz(s.params.omega2),
                t2_us: s.config.pulse2.t2_us,
                t0_us: s.config.pulse2.center_us,
                residual_eta: f64::NAN,
                residual_zeta: f64::NAN,
                evaluations: 0,
            };
            (pulse, s.params.omega2, summary)
        }
    };
    let g2 = s.params.raman_coupling(omega2);
    let k = s.params.k;
    let ode = simulate_receiver_ode(&pulse2, modes, g2, k, s.params.phi2, &s.state)?;
    let (trajectory, ode_deviation) = match gamma_analytic(&pulse_areas(&pulse2, modes, g2, k), &s.state, s.params.phi2) {
        Ok(analytic) => {
            let dev = analytic.max_deviation(&ode);
            (analytic, Some(dev))
        }
        Err(ModelError::AnalyticPhaseOnly { .. }) => (ode, None),
        Err(e) => return Err(e.into()),
    };
    let (eta, zeta) = (*trajectory.eta.last(), *trajectory.zeta.last());
    if solve.mode == Pulse2Mode::Explicit {
        solve.residual_eta = eta - std::f64::consts::PI;
        solve.residual_zeta = zeta - std::f64::consts::PI;
    }
    let residual = conservation_check(
        &trajectory,
        &send.photons.n_out,
        &send.photons.fluxes.total,
        k,
    )?;
    let final_state = final_state(&trajectory, &s.state, s.config.leakage_threshold()?)?;
    Ok(ReceiveRun {
        block_norm_errors: trajectory.block_norm_errors(&s.state),
        pulse2,
        omega2,
        solve,
        trajectory,
        ode_deviation,
        residual,
        final_state,
    })
}

pub fn transfer_report(s: &Scenario, send: &SendRun, recv: &ReceiveRun) -> Result<TransferReport<f64>, ConfigError> {
    let link = link_budget(
        &s.config.channel_model()?,
        &s.config.node_efficiencies()?,
        &s.state,
        s.config.channel.phase_warning_rad,
    );
    Ok(TransferReport::new(
        recv.final_state.fidelity,
        link,
        TransferDiagnostics {
            r_sn: s.derived.r_sn,
            inverse_r_sn: 1.0 / s.derived.r_sn,
            mode_overlap: send.photons.overlap,
            residual_eta: recv.solve.residual_eta,
            residual_zeta: recv.solve.residual_zeta,
            leakage: recv.final_state.leakage,
            leakage_warning: recv.final_state.leakage_warning,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SenderSummary {
    pub theta_final: f64,
    pub sigma_final: [f64; 3],
    #[serde(rename = "P_final")]
    pub p_final: [f64; 3],
    pub n_out_final: f64,
    pub g2_max: f64,
    pub mode_norms_sqr: (f64, f64),
    pub mode_overlap: Option<f64>,
    pub conservation_error: f64,
    pub ode_conservation_error: f64,
    pub ode_max_deviation: f64,
    pub coherence_source: &'static str,
}

impl SenderSummary {
    pub fn new(send: &SendRun) -> Self {
        let ph = &send.photons;
        let last = ph.grid.len() - 1;
        Self {
            theta_final: send.trajectory.theta_final(),
            sigma_final: *send.trajectory.populations.sigma.last().expect("non-empty grid"),
            p_final: [ph.p0[last], ph.p1[last], ph.p2[last]],
            n_out_final: *ph.n_out.last(),
            g2_max: ph.g2.values.iter().copied().fold(0.0, f64::max),
            mode_norms_sqr: ph.fluxes.modes.norms_sqr(),
            mode_overlap: ph.overlap,
            conservation_error: send.trajectory.populations.conservation_error(),
            ode_conservation_error: send.ode.conservation_error(),
            ode_max_deviation: send.ode_deviation,
            coherence_source: send.exported_coherences().1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReceiverSummary {
    pub fidelity: f64,
    pub leakage: f64,
    pub leakage_warning: bool,
    /// [re, im] of c₋₁, c₀, c₊₁ after absorption.
    pub output_state: [[f64; 2]; 3],
    pub eta_final: f64,
    pub zeta_final: f64,
    pub block_norm_errors: (f64, f64),
    pub ode_max_deviation: Option<f64>,
    pub conservation_residual_max: f64,
    pub conservation_residual_final: f64,
}

impl ReceiverSummary {
    pub fn new(r: &ReceiveRun) -> Self {
        let st = r.final_state.state;
        let pair = |c: num_complex::Complex<f64>| [c.re, c.im];
        Self {
            fidelity: r.final_state.fidelity,
            leakage: r.final_state.leakage,
            leakage_warning: r.final_state.leakage_warning,
            output_state: [pair(st.c_m1), pair(st.c_0), pair(st.c_p1)],
            eta_final: *r.trajectory.eta.last(),
            zeta_final: *r.trajectory.zeta.last(),
            block_norm_errors: r.block_norm_errors,
            ode_max_deviation: r.ode_deviation,
            conservation_residual_max: r.residual.max_abs(),
            conservation_residual_final: *r.residual.last(),
        }
    }
}

/// Everything written to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config_sha256: String,
    pub warnings: Vec<String>,
    pub derived: DerivedQuantities<f64>,
    #[serde(rename = "kT1")]
    pub k_t1: f64,
    pub regime: RegimeReport<f64>,
    pub sender: SenderSummary,
    pub solve: Option<SolveSummary>,
    pub receiver: Option<ReceiverSummary>,
    pub transfer: Option<TransferReport<f64>>,
    pub success_rule: &'static str,
}

impl RunReport {
    pub fn new(command: &'static str, s: &Scenario, send: &SendRun) -> Self {
        Self {
            command,
            config_sha256: s.sha256.clone(),
            warnings: s.warnings.clone(),
            derived: s.derived,
            k_t1: s.params.k * s.config.t1(),
            regime: s.regime.clone(),
            sender: SenderSummary::new(send),
            solve: None,
            receiver: None,
            transfer: None,
            success_rule: "branch_weighted: |c0|^2 P1 + |c-1|^2 P2 + |c+1|^2",
        }
    }
}
