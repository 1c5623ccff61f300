//! Scenario files: TOML with MHz / μs / km units, converted to SI on use.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use pnss_core::{
    mhz, ChannelModel, FreeVariables, NodeEfficiencies, Params64, Pulse64, PulseSolveOptions,
    RegimeThresholds, State64, TimeGrid,
};

/// Largest |‖c‖² − 1| that is silently fixed by renormalizing.
pub const RENORMALIZE_LIMIT: f64 = 1e-6;

/// Virtual sweep axis: |c₋₁|², with |c₊₁|² held and c₀ absorbing the rest.
pub const POP_M1_AXIS: &str = "initial_state.pop_m1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub pulse1: Pulse1Config,
    #[serde(default)]
    pub pulse2: Pulse2Config,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub g_mhz: f64,
    pub k_mhz: f64,
    pub gamma_sp_mhz: f64,
    pub omega1_mhz: f64,
    pub omega2_mhz: f64,
    pub delta_mhz: f64,
    #[serde(rename = "delta_B_ground_mhz")]
    pub delta_b_ground_mhz: f64,
    #[serde(rename = "delta_B_excited_mhz")]
    pub delta_b_excited_mhz: f64,
    /// rad
    pub phi2: f64,
    pub atom_mass_kg: f64,
    pub wavelength_nm: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = Params64::rb87_reference();
        Self {
            g_mhz: 12.0,
            k_mhz: 3.0,
            gamma_sp_mhz: 5.87,
            omega1_mhz: 10.0,
            omega2_mhz: 10.0,
            delta_mhz: 100.0,
            delta_b_ground_mhz: 10.5,
            delta_b_excited_mhz: 15.0,
            phi2: p.phi2,
            atom_mass_kg: p.atom_mass,
            wavelength_nm: p.wavelength * 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialStateConfig {
    pub c_m1: [f64; 2],
    pub c_0: [f64; 2],
    pub c_p1: [f64; 2],
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self {
            c_m1: [0.7f64.sqrt(), 0.0],
            c_0: [0.3f64.sqrt(), 0.0],
            c_p1: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFamily {
    Gaussian,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Pulse1Config {
    pub shape: PulseFamily,
    /// Duration; also the grid unit for tabulated shapes.
    #[serde(rename = "T1_us")]
    pub t1_us: f64,
    pub center_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end_us: Option<f64>,
}

impl Default for Pulse1Config {
    fn default() -> Self {
        Self {
            shape: PulseFamily::Gaussian,
            t1_us: 0.3,
            center_us: 0.0,
            samples: None,
            t_start_us: None,
            t_end_us: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pulse2Mode {
    Solve,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Pulse2Config {
    pub mode: Pulse2Mode,
    pub family: PulseFamily,
    pub free: FreeVariables,
    /// On non-convergence with a fixed Ω₂, retry with t₀ = `center_us` fixed
    /// and Ω₂ free.
    pub fallback: bool,
    #[serde(rename = "T2_range_us")]
    pub t2_range_us: [f64; 2],
    pub center_range_us: [f64; 2],
    pub omega2_range_mhz: [f64; 2],
    pub scan_points: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Explicit mode only.
    #[serde(rename = "T2_us")]
    pub t2_us: f64,
    /// Explicit center, or the fixed center of a width-and-amplitude solve.
    pub center_us: f64,
    /// Shifts the receiver kt column only.
    pub delay_us: f64,
    pub leakage_threshold: f64,
}

impl Default for Pulse2Config {
    fn default() -> Self {
        Self {
            mode: Pulse2Mode::Solve,
            family: PulseFamily::Gaussian,
            free: FreeVariables::WidthAndCenter,
            fallback: true,
            t2_range_us: [0.05, 5.0],
            center_range_us: [-2.0, 2.0],
            omega2_range_mhz: [0.1, 1000.0],
            scan_points: 48,
            max_iter: 200,
            tol: 1e-6,
            t2_us: 1.0,
            center_us: 0.0,
            delay_us: 0.0,
            leakage_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Half-width of the window around the sending pulse center, in T₁.
    #[serde(rename = "span_in_T1")]
    pub span_in_t1: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            span_in_t1: 6.0,
            points: 48001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    #[serde(rename = "L0_km")]
    pub l0_km: f64,
    pub atten_db_per_km: f64,
    /// rad/km
    pub phase_rate: f64,
    pub phase_warning_rad: f64,
    pub p_em: f64,
    pub p_abs: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            l0_km: 0.06,
            atten_db_per_km: 2.0,
            phase_rate: 0.1,
            phase_warning_rad: 0.5,
            p_em: 1.0,
            p_abs: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeConfig {
    pub min_ratio: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self { min_ratio: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvKind {
    Sender,
    Photonics,
    Receiver,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub directory: PathBuf,
    pub csv: Vec<CsvKind>,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            csv: vec![CsvKind::Sender, CsvKind::Photonics, CsvKind::Receiver, CsvKind::Summary],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: String,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

/// A parsed scenario plus the SHA-256 of the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let config = parse(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    Ok(LoadedConfig {
        config,
        sha256: sha256_hex(&bytes),
    })
}

pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<config>"),
        message: e.to_string(),
    })
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn range(field: &str, r: [f64; 2]) -> Result<(f64, f64), ConfigError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] < r[1] {
        Ok((r[0], r[1]))
    } else {
        Err(invalid(field, format!("must be [lo, hi] with lo < hi, got {r:?}")))
    }
}

fn probability(field: &str, v: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

impl ScenarioConfig {
    pub fn physical_params(&self) -> Result<Params64, ConfigError> {
        let p = &self.params;
        let out = Params64 {
            g: mhz(p.g_mhz),
            k: mhz(p.k_mhz),
            gamma_sp: mhz(p.gamma_sp_mhz),
            omega1: mhz(p.omega1_mhz),
            omega2: mhz(p.omega2_mhz),
            delta: mhz(p.delta_mhz),
            delta_b_ground: mhz(p.delta_b_ground_mhz),
            delta_b_excited: mhz(p.delta_b_excited_mhz),
            phi2: p.phi2,
            atom_mass: p.atom_mass_kg,
            wavelength: p.wavelength_nm * 1e-9,
        };
        out.validate()
            .map_err(|e| invalid("params", e.to_string()))?;
        Ok(out)
    }

    /// The input state, renormalized when ‖c‖² is within 1e-6 of 1.
    ///
    /// Returns the state and a warning when renormalization happened.
    pub fn initial_state(&self) -> Result<(State64, Option<String>), ConfigError> {
        let s = &self.initial_state;
        let c = |v: [f64; 2]| Complex::new(v[0], v[1]);
        let (m1, z, p1) = (c(s.c_m1), c(s.c_0), c(s.c_p1));
        let norm = m1.norm_sqr() + z.norm_sqr() + p1.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() >= RENORMALIZE_LIMIT {
            return Err(invalid(
                "initial_state",
                format!("|c_m1|^2 + |c_0|^2 + |c_p1|^2 = {norm}, must be 1"),
            ));
        }
        if let Ok(exact) = State64::new(m1, z, p1) {
            return Ok((exact, None));
        }
        let state = State64::normalized(m1, z, p1)
            .map_err(|e| invalid("initial_state", e.to_string()))?;
        Ok((
            state,
            Some(format!("initial_state renormalized (norm^2 was {norm:.12})")),
        ))
    }

    pub fn sender_pulse(&self) -> Result<Pulse64, ConfigError> {
        let p = &self.pulse1;
        positive("pulse1.T1_us", p.t1_us)?;
        match p.shape {
            PulseFamily::Gaussian => Pulse64::gaussian(p.center_us * 1e-6, p.t1_us * 1e-6)
                .map_err(|e| invalid("pulse1", e.to_string())),
            PulseFamily::Tabulated => {
                let (Some(values), Some(t0), Some(t1)) = (&p.samples, p.t_start_us, p.t_end_us)
                else {
                    return Err(invalid(
                        "pulse1",
                        "tabulated shape needs samples, t_start_us and t_end_us",
                    ));
                };
                let grid = TimeGrid::uniform(t0 * 1e-6, t1 * 1e-6, values.len())
                    .map_err(|e| invalid("pulse1.samples", e.to_string()))?;
                Pulse64::tabulated(&grid, values.clone())
                    .map_err(|e| invalid("pulse1.samples", e.to_string()))
            }
        }
    }

    pub fn t1(&self) -> f64 {
        self.pulse1.t1_us * 1e-6
    }

    pub fn time_grid(&self) -> Result<TimeGrid<f64>, ConfigError> {
        let g = &self.grid;
        positive("grid.span_in_T1", g.span_in_t1)?;
        if g.points < 3 {
            return Err(invalid("grid.points", "must be >= 3"));
        }
        TimeGrid::centered(
            self.pulse1.center_us * 1e-6,
            g.span_in_t1 * self.t1(),
            g.points,
        )
        .map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn thresholds(&self) -> Result<RegimeThresholds<f64>, ConfigError> {
        Ok(RegimeThresholds {
            min_ratio: positive("regime.min_ratio", self.regime.min_ratio)?,
        })
    }

    pub fn channel_model(&self) -> Result<ChannelModel<f64>, ConfigError> {
        let c = &self.channel;
        ChannelModel::new(c.l0_km, c.atten_db_per_km, c.phase_rate)
            .map_err(|e| invalid("channel", e.to_string()))
    }

    pub fn node_efficiencies(&self) -> Result<NodeEfficiencies<f64>, ConfigError> {
        Ok(NodeEfficiencies {
            p_em: probability("channel.p_em", self.channel.p_em)?,
            p_abs: probability("channel.p_abs", self.channel.p_abs)?,
        })
    }

    /// Solver options for the configured free variables.
    pub fn solve_options(&self, params: &Params64) -> Result<PulseSolveOptions<f64>, ConfigError> {
        self.solve_options_for(self.pulse2.free, params)
    }

    pub fn solve_options_for(
        &self,
        free: FreeVariables,
        params: &Params64,
    ) -> Result<PulseSolveOptions<f64>, ConfigError> {
        let p = &self.pulse2;
        if p.family != PulseFamily::Gaussian {
            return Err(invalid("pulse2.family", "only gaussian receiving pulses are solved for"));
        }
        positive("pulse2.tol", p.tol)?;
        if p.scan_points < 2 {
            return Err(invalid("pulse2.scan_points", "must be >= 2"));
        }
        let (w0, w1) = range("pulse2.T2_range_us", p.t2_range_us)?;
        positive("pulse2.T2_range_us", w0)?;
        let (c0, c1) = range("pulse2.center_range_us", p.center_range_us)?;
        let (a0, a1) = range("pulse2.omega2_range_mhz", p.omega2_range_mhz)?;
        positive("pulse2.omega2_range_mhz", a0)?;
        Ok(PulseSolveOptions {
            free,
            amplitude: params.omega2,
            center: p.center_us * 1e-6,
            width_range: (w0 * 1e-6, w1 * 1e-6),
            center_range: (c0 * 1e-6, c1 * 1e-6),
            amplitude_range: (mhz(a0), mhz(a1)),
            scan_points: p.scan_points,
            tol: p.tol,
            max_iter: p.max_iter,
        })
    }

    pub fn explicit_receiver_pulse(&self) -> Result<Pulse64, ConfigError> {
        let p = &self.pulse2;
        if p.family != PulseFamily::Gaussian {
            return Err(invalid("pulse2.family", "explicit receiving pulses must be gaussian"));
        }
        Pulse64::gaussian(p.center_us * 1e-6, positive("pulse2.T2_us", p.t2_us)? * 1e-6)
            .map_err(|e| invalid("pulse2", e.to_string()))
    }

    pub fn leakage_threshold(&self) -> Result<f64, ConfigError> {
        probability("pulse2.leakage_threshold", self.pulse2.leakage_threshold)
    }

    /// Full validation, as done before any pipeline runs.
    pub fn check(&self) -> Result<Vec<String>, ConfigError> {
        let params = self.physical_params()?;
        let (_, warning) = self.initial_state()?;
        self.sender_pulse()?;
        self.time_grid()?;
        self.thresholds()?;
        self.channel_model()?;
        self.node_efficiencies()?;
        self.leakage_threshold()?;
        match self.pulse2.mode {
            Pulse2Mode::Solve => {
                self.solve_options(&params)?;
            }
            Pulse2Mode::Explicit => {
                self.explicit_receiver_pulse()?;
            }
        }
        Ok(warning.into_iter().collect())
    }

    /// Copy with the scalar at `path` (e.g. `channel.L0_km`) replaced by `value`.
    pub fn with_scalar(&self, path: &str, value: f64) -> Result<Self, ConfigError> {
        if path == POP_M1_AXIS {
            return self.with_pop_m1(value);
        }
        let mut root = toml::Value::try_from(self)
            .map_err(|e| invalid(path, format!("cannot address config: {e}")))?;
        let mut node = &mut root;
        for key in path.split('.') {
            node = node
                .get_mut(key)
                .ok_or_else(|| invalid(path, format!("no such field `{key}`")))?;
        }
        *node = match node {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => {
                toml::Value::Integer(value as i64)
            }
            toml::Value::Integer(_) => {
                return Err(invalid(path, format!("integer field cannot take {value}")))
            }
            _ => return Err(invalid(path, "axis must name a scalar numeric field")),
        };
        root.try_into()
            .map_err(|e: toml::de::Error| invalid(path, e.to_string()))
    }

    fn with_pop_m1(&self, pop: f64) -> Result<Self, ConfigError> {
        let s = &self.initial_state;
        let p1 = s.c_p1[0] * s.c_p1[0] + s.c_p1[1] * s.c_p1[1];
        let rest = 1.0 - p1 - pop;
        if !(0.0..=1.0).contains(&pop) || rest < -1e-12 {
            return Err(invalid(
                POP_M1_AXIS,
                format!("{pop} leaves no room next to |c_p1|^2 = {p1}"),
            ));
        }
        let mut out = self.clone();
        out.initial_state.c_m1 = [pop.sqrt(), 0.0];
        out.initial_state.c_0 = [rest.max(0.0).sqrt(), 0.0];
        Ok(out)
    }

    /// Whether a sweep over `path` leaves the sender and receiver untouched.
    pub fn is_channel_axis(path: &str) -> bool {
        path.starts_with("channel.")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_reference_scenario() {
        let c = parse("").unwrap();
        assert_eq!(c, ScenarioConfig {
            params: ParamsConfig::default(),
            initial_state: InitialStateConfig::default(),
            pulse1: Pulse1Config::default(),
            pulse2: Pulse2Config::default(),
            grid: GridConfig::default(),
            channel: ChannelConfig::default(),
            regime: RegimeConfig::default(),
            outputs: OutputsConfig::default(),
            sweep: None,
        });
        let p = c.physical_params().unwrap();
        let r = Params64::rb87_reference();
        assert!((p.g - r.g).abs() < 1e-6 && (p.wavelength - r.wavelength).abs() < 1e-18);
        assert!(c.check().unwrap().is_empty());
    }

    #[test]
    fn unknown_field_names_location() {
        let err = parse("[channel]\nL0_km = 1.0\nlength = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("length") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn integers_read_as_floats() {
        let c = parse("[channel]\nL0_km = 2\n").unwrap();
        assert_eq!(c.channel.l0_km, 2.0);
    }

    #[test]
    fn near_normalized_state_is_fixed_with_warning() {
        let c = parse("[initial_state]\nc_m1 = [0.8366603, 0.0]\nc_0 = [0.5477226, 0.0]\n").unwrap();
        let (s, w) = c.initial_state().unwrap();
        assert!(w.is_some());
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        let c = parse("[initial_state]\nc_m1 = [0.9, 0.0]\nc_0 = [0.5, 0.0]\n").unwrap();
        assert!(c.initial_state().is_err());
    }

    #[test]
    fn scalar_paths() {
        let c = parse("").unwrap();
        let d = c.with_scalar("channel.L0_km", 3.5).unwrap();
        assert_eq!(d.channel.l0_km, 3.5);
        let d = c.with_scalar("grid.points", 2001.0).unwrap();
        assert_eq!(d.grid.points, 2001);
        assert!(c.with_scalar("grid.points", 2.5).is_err());
        assert!(c.with_scalar("initial_state.c_m1", 0.5).is_err());
        assert!(c.with_scalar("pulse2.mode", 0.5).is_err());
        assert!(c.with_scalar("channel.nope", 0.5).is_err());
        let d = c.with_scalar(POP_M1_AXIS, 0.25).unwrap();
        let (s, w) = d.initial_state().unwrap();
        assert!(w.is_none());
        assert!((s.populations()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hash_is_of_bytes() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
