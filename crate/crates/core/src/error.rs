use thiserror::Error;

/// Failures of the generic numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("time grid needs at least two points, got {0}")]
    GridTooSmall(usize),
    #[error("time grid span [{t_start}, {t_end}] is empty or not finite")]
    InvalidGridSpan { t_start: f64, t_end: f64 },
    #[error("non-uniform grid: spacing {spacing} at index {index}, expected {expected}")]
    NonUniformGrid {
        index: usize,
        spacing: f64,
        expected: f64,
    },
    #[error("{samples} samples for a grid of {grid} points")]
    LengthMismatch { grid: usize, samples: usize },
    #[error("sampled functions live on different grids")]
    GridMismatch,
    #[error("non-finite derivative in component {component} at step {step} (t = {time})")]
    NonFiniteDerivative {
        step: usize,
        time: f64,
        component: usize,
    },
    #[error("no sign change in bracket [{a}, {b}] (f = {fa}, {fb})")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("function is not finite at x = {x}")]
    NonFiniteFunction { x: f64 },
    #[error("root finder stopped after {iterations} iterations at x = {best} (f = {residual})")]
    RootNotConverged {
        iterations: usize,
        best: f64,
        residual: f64,
    },
}

/// Invalid model input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("superposition state has norm² {norm_sqr}, expected 1")]
    NotNormalized { norm_sqr: f64 },
    #[error("closed-form receiver amplitudes need phi2 = pi/2 (got {phi2}); use the ODE path")]
    AnalyticPhaseOnly { phi2: f64 },
    #[error("mode function has zero norm")]
    ZeroNormMode,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
