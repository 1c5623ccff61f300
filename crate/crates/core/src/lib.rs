//! Photon-number superposition transfer between two Λ-type atom–cavity nodes.
//!
//! Every model type is generic over the scalar [`Real`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod channel;
pub mod error;
pub mod numerics;
pub mod params;
pub mod photonics;
pub mod pulse;
pub mod receiver;
mod scalar;
pub mod sender;

pub use channel::{
    link_budget, ChannelModel, LinkBudget, NodeEfficiencies, TransferDiagnostics, TransferReport,
};
pub use error::{ModelError, NumericsError};
pub use numerics::{SampledFunction, TimeGrid};
pub use params::{
    derive, mhz, to_mhz, validate_regime, DerivedQuantities, PhysicalParams, RegimeReport,
    RegimeThresholds, SuperpositionState,
};
pub use photonics::{ModeFunctions, PhotonObservables};
pub use pulse::PulseShape;
pub use receiver::{
    solve_pulse_shape, FreeVariables, PulseSolveOptions, PulseSolveResult, ReceiverTrajectory,
    SolveError,
};
pub use scalar::Real;
pub use sender::SenderTrajectory;

pub type Params64 = PhysicalParams<f64>;
pub type Params32 = PhysicalParams<f32>;
pub type State64 = SuperpositionState<f64>;
pub type State32 = SuperpositionState<f32>;
pub type Grid64 = TimeGrid<f64>;
pub type Grid32 = TimeGrid<f32>;
pub type Pulse64 = PulseShape<f64>;
pub type Pulse32 = PulseShape<f32>;
pub type Sender64 = SenderTrajectory<f64>;
pub type Sender32 = SenderTrajectory<f32>;
pub type Receiver64 = ReceiverTrajectory<f64>;
pub type Receiver32 = ReceiverTrajectory<f32>;
pub type Photons64 = PhotonObservables<f64>;
pub type Photons32 = PhotonObservables<f32>;
