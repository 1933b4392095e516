//! Scenario configuration: JSON files with one scenario each, strict keys,
//! defaults for everything but the scenario name, and `--set` overrides.

use std::path::{Path, PathBuf};

use rydsim::bloch::{LevelScheme, Propagation};
use rydsim::blockade::{ChirpPulse, Envelope, GaussianPulse, StirapPulses, TrapProfile};
use rydsim::foerster::{AtomSampler, PairTruncation};
use rydsim::model::{calibrate_to_target, FoersterChannel, LaserField, RfField};
use rydsim::model::{
    RB37P_DD_COEFF_MHZ_UM3, RB37P_DEFECT_ZERO_FIELD_MHZ, RB37P_RESONANCE_FIELD_VCM,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_SEED: u64 = 1;

/// Problems with a configuration file. All map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: syntax error at line {line}, column {column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("--set {arg}: {reason}")]
    Override { arg: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Spectrum,
    Doppler,
    FoersterScan,
    FoersterTime,
    RfFloquet,
    BlockadeRevivals,
    Chirp,
    Stirap,
    GateSim,
    MesoscopicGate,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::Spectrum,
        ScenarioName::Doppler,
        ScenarioName::FoersterScan,
        ScenarioName::FoersterTime,
        ScenarioName::RfFloquet,
        ScenarioName::BlockadeRevivals,
        ScenarioName::Chirp,
        ScenarioName::Stirap,
        ScenarioName::GateSim,
        ScenarioName::MesoscopicGate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Spectrum => "spectrum",
            ScenarioName::Doppler => "doppler",
            ScenarioName::FoersterScan => "foerster-scan",
            ScenarioName::FoersterTime => "foerster-time",
            ScenarioName::RfFloquet => "rf-floquet",
            ScenarioName::BlockadeRevivals => "blockade-revivals",
            ScenarioName::Chirp => "chirp",
            ScenarioName::Stirap => "stirap",
            ScenarioName::GateSim => "gate-sim",
            ScenarioName::MesoscopicGate => "mesoscopic-gate",
        }
    }
}

/// Evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        rydsim::trace::linspace(self.start, self.stop, self.points)
    }

    fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(invalid(format!("{key}.start"), "grid ends must be finite"));
        }
        if self.points == 0 || (self.points > 1 && !(self.stop > self.start)) {
            return Err(invalid(
                format!("{key}.points"),
                "need at least one point and stop > start",
            ));
        }
        Ok(())
    }
}

/// A Förster channel `Δ(E) = Δ₀ − sE²` with `s` fixed by `Δ(E_cal) = target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    pub defect_zero_field_mhz: f64,
    pub calibration_field_vcm: f64,
    pub calibration_target_mhz: f64,
    pub dd_coeff_mhz_um3: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            defect_zero_field_mhz: RB37P_DEFECT_ZERO_FIELD_MHZ,
            calibration_field_vcm: RB37P_RESONANCE_FIELD_VCM,
            calibration_target_mhz: 0.0,
            dd_coeff_mhz_um3: RB37P_DD_COEFF_MHZ_UM3,
        }
    }
}

impl ChannelSpec {
    pub fn build(&self) -> rydsim::Result<FoersterChannel> {
        let cal = calibrate_to_target(
            self.defect_zero_field_mhz,
            self.calibration_field_vcm,
            self.calibration_target_mhz,
        )?;
        FoersterChannel::new(cal, self.dd_coeff_mhz_um3)
    }
}

fn field(wavelength_nm: f64, detuning_mhz: f64, rabi_mhz: f64, linewidth_mhz: f64) -> LaserField {
    LaserField {
        wavelength_nm,
        detuning_mhz,
        rabi_mhz,
        linewidth_mhz,
    }
}

/// Rb 5S → 5P₃/₂ → 6S₁/₂ → nP ladder, first step detuned by +92 MHz.
pub fn default_rb_scheme() -> LevelScheme {
    LevelScheme {
        steps: [
            field(780.241, 92.0, 10.0, 0.3),
            field(1367.0, 0.0, 40.0, 0.3),
            field(743.0, 0.0, 1.0, 0.3),
        ],
        decay_mhz: [6.07, 3.5, 0.0],
        interaction_time_us: 2.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub scheme: LevelScheme,
    pub delta3_mhz: Grid,
    pub n0: f64,
    pub propagation: Propagation,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            scheme: default_rb_scheme(),
            delta3_mhz: Grid::new(-130.0, 40.0, 341),
            n0: 1.0,
            propagation: Propagation::Exact,
        }
    }
}

/// Beam arrangement for Doppler averaging; wavelengths come from the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Planar star with vanishing wave-vector sum.
    Star,
    /// All beams along one axis.
    Collinear,
    Explicit {
        unit_wavevectors: [[f64; 3]; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DopplerParams {
    pub scheme: LevelScheme,
    pub geometry: GeometrySpec,
    pub temperature_k: f64,
    pub mass_amu: f64,
    pub n_velocity_samples: usize,
    pub delta3_mhz: Grid,
    pub propagation: Propagation,
}

impl Default for DopplerParams {
    fn default() -> Self {
        // Far-detuned intermediates with a three-photon π pulse in T = 2 μs.
        let (delta, rabi2, t): (f64, f64, f64) = (3000.0, 1000.0, 2.0);
        let rabi_eff = 1.0 / (2.0 * t);
        let rabi13 = (rabi_eff * 4.0 * (delta * delta - rabi2 * rabi2 / 4.0) / rabi2).sqrt();
        Self {
            scheme: LevelScheme {
                steps: [
                    field(780.241, delta, rabi13, 0.0),
                    field(1367.0, 0.0, rabi2, 0.0),
                    field(743.0, 0.0, rabi13, 0.0),
                ],
                decay_mhz: [6.07, 3.5, 0.0],
                interaction_time_us: t,
            },
            geometry: GeometrySpec::Star,
            temperature_k: 300.0,
            mass_amu: 84.911_789_738,
            n_velocity_samples: 200,
            delta3_mhz: Grid::new(-delta - 3.0 / t, -delta + 3.0 / t, 61),
            propagation: Propagation::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoersterScanParams {
    pub channel: ChannelSpec,
    pub atom_count: usize,
    pub truncation: PairTruncation,
    pub sampler: AtomSampler,
    pub n_samples: usize,
    pub field_vcm: Grid,
    pub interaction_time_us: f64,
}

impl Default for FoersterScanParams {
    fn default() -> Self {
        Self {
            channel: ChannelSpec::default(),
            atom_count: 2,
            truncation: PairTruncation::default(),
            sampler: AtomSampler::default(),
            n_samples: 200,
            field_vcm: Grid::new(1.6, 2.0, 161),
            interaction_time_us: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoersterTimeParams {
    pub channel: ChannelSpec,
    pub atom_count: usize,
    pub truncation: PairTruncation,
    pub sampler: AtomSampler,
    pub n_samples: usize,
    pub field_vcm: Grid,
    pub interaction_times_us: Vec<f64>,
}

impl Default for FoersterTimeParams {
    fn default() -> Self {
        Self {
            channel: ChannelSpec::default(),
            atom_count: 2,
            truncation: PairTruncation::default(),
            sampler: AtomSampler::default(),
            n_samples: 200,
            field_vcm: Grid::new(1.65, 1.93, 281),
            interaction_times_us: vec![0.1, 0.25, 0.5, 1.0, 1.5, 2.0],
        }
    }
}

/// Direct time-domain check of the rf crossings with one atom pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfTimeDomain {
    pub pair_distance_um: f64,
    pub interaction_time_us: f64,
    /// Half-width of the field window scanned around each crossing.
    pub window_vcm: f64,
    pub points_per_window: usize,
    pub tolerance: f64,
}

impl Default for RfTimeDomain {
    fn default() -> Self {
        Self {
            pair_distance_um: 8.9,
            interaction_time_us: 3.0,
            window_vcm: 0.03,
            points_per_window: 121,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfFloquetParams {
    pub channel: ChannelSpec,
    pub rf: RfField,
    pub m_max: u32,
    pub field_range_vcm: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_domain: Option<RfTimeDomain>,
}

impl Default for RfFloquetParams {
    fn default() -> Self {
        Self {
            channel: ChannelSpec::default(),
            rf: RfField {
                frequency_mhz: 15.0,
                defect_modulation_mhz: 15.0,
                field_amplitude_vcm: None,
            },
            m_max: 2,
            field_range_vcm: [0.0, 3.0],
            time_domain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockadeParams {
    pub n_bar: f64,
    pub trap_radius_um: f64,
    pub profile: TrapProfile,
    pub r_min_um: f64,
    pub c6_mhz_um6: f64,
    pub rabi: RabiSpec,
    pub detuning_mhz: f64,
    pub k_max: usize,
    pub n_samples: usize,
    pub time_us: Grid,
}

impl Default for BlockadeParams {
    fn default() -> Self {
        Self {
            n_bar: 7.0,
            trap_radius_um: 2.0,
            profile: TrapProfile::Gaussian,
            r_min_um: 0.5,
            c6_mhz_um6: 3.2e6,
            rabi: RabiSpec::BlockadeRadiusUm(10.0),
            detuning_mhz: 0.0,
            k_max: 2,
            n_samples: 500,
            time_us: Grid::new(0.0, 10.0, 1001),
        }
    }
}

/// Single-atom Rabi frequency, given directly or through the blockade radius
/// it should produce for `n_bar` atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RabiSpec {
    RabiMhz(f64),
    BlockadeRadiusUm(f64),
}

impl BlockadeParams {
    pub fn rabi(&self) -> rydsim::Result<f64> {
        match self.rabi {
            RabiSpec::RabiMhz(r) => Ok(r),
            RabiSpec::BlockadeRadiusUm(radius) => rydsim::model::rabi_for_blockade_radius(
                self.c6_mhz_um6,
                radius,
                self.n_bar.round().max(1.0) as u32,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpParams {
    pub chirp: ChirpPulse,
    pub atom_counts: Vec<usize>,
}

impl Default for ChirpParams {
    fn default() -> Self {
        Self {
            chirp: ChirpPulse {
                rabi_mhz: 3.0,
                sweep_start_mhz: -50.0,
                sweep_end_mhz: 50.0,
                duration_us: 10.0,
                envelope: Envelope::SinSquared,
            },
            atom_counts: (1..=10).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StirapParams {
    pub pulses: StirapPulses,
    pub time_us: Grid,
    pub tolerance: f64,
}

impl Default for StirapParams {
    fn default() -> Self {
        let g = |center_us| GaussianPulse {
            peak_rabi_mhz: 20.0,
            center_us,
            width_us: 1.0,
        };
        Self {
            pulses: StirapPulses {
                pump: g(1.0),
                stokes: g(-1.0),
                intermediate_detuning_mhz: 0.0,
            },
            time_us: Grid::new(-6.0, 6.0, 241),
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSimParams {
    pub rabi_mhz: f64,
    pub b_over_rabi: Vec<f64>,
    pub truth_table_b_over_rabi: f64,
}

impl Default for GateSimParams {
    fn default() -> Self {
        Self {
            rabi_mhz: 1.0,
            b_over_rabi: vec![0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0],
            truth_table_b_over_rabi: 100.0,
        }
    }
}

/// How the return half of a mesoscopic rotation is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Echo {
    #[default]
    PhaseCompensated,
    TimeReversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MesoscopicParams {
    pub chirp: ChirpPulse,
    pub alpha_rad: f64,
    pub echo: Echo,
    pub atom_counts: Vec<usize>,
}

impl Default for MesoscopicParams {
    fn default() -> Self {
        Self {
            chirp: ChirpPulse {
                rabi_mhz: 3.0,
                sweep_start_mhz: -15.0,
                sweep_end_mhz: 15.0,
                duration_us: 6.0,
                envelope: Envelope::SinSquared,
            },
            alpha_rad: 0.3,
            echo: Echo::PhaseCompensated,
            atom_counts: (1..=10).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Spectrum(SpectrumParams),
    Doppler(DopplerParams),
    FoersterScan(FoersterScanParams),
    FoersterTime(FoersterTimeParams),
    RfFloquet(RfFloquetParams),
    BlockadeRevivals(BlockadeParams),
    Chirp(ChirpParams),
    Stirap(StirapParams),
    GateSim(GateSimParams),
    MesoscopicGate(MesoscopicParams),
}

/// A fully resolved scenario: every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioName,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: Option<Value>,
}

fn typed<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." {
            prefix.to_string()
        } else {
            format!("{prefix}.{path}")
        };
        invalid(key, e.into_inner().to_string())
    })
}

fn model_error(prefix: &str, e: rydsim::Error) -> ConfigError {
    match e {
        rydsim::Error::Invalid { name, reason } => invalid(format!("{prefix}.{name}"), reason),
        other => invalid(prefix, other.to_string()),
    }
}

impl ScenarioConfig {
    /// Resolves a parsed JSON document.
    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        let raw: RawConfig = typed(value, "config").map_err(|e| match e {
            ConfigError::Invalid { key, reason } => ConfigError::Invalid {
                key: key.trim_start_matches("config.").to_string(),
                reason,
            },
            other => other,
        })?;
        let params = match raw.params {
            None | Some(Value::Null) => Value::Object(Default::default()),
            Some(v) => v,
        };
        let p = "params";
        let params = match raw.scenario {
            ScenarioName::Spectrum => Params::Spectrum(typed(params, p)?),
            ScenarioName::Doppler => Params::Doppler(typed(params, p)?),
            ScenarioName::FoersterScan => Params::FoersterScan(typed(params, p)?),
            ScenarioName::FoersterTime => Params::FoersterTime(typed(params, p)?),
            ScenarioName::RfFloquet => Params::RfFloquet(typed(params, p)?),
            ScenarioName::BlockadeRevivals => Params::BlockadeRevivals(typed(params, p)?),
            ScenarioName::Chirp => Params::Chirp(typed(params, p)?),
            ScenarioName::Stirap => Params::Stirap(typed(params, p)?),
            ScenarioName::GateSim => Params::GateSim(typed(params, p)?),
            ScenarioName::MesoscopicGate => Params::MesoscopicGate(typed(params, p)?),
        };
        let cfg = Self {
            scenario: raw.scenario,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("runs")),
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configs serialize to JSON")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize to JSON") + "\n"
    }

    /// Checks every parameter against the model's rules.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = "params";
        let m = |e| model_error(p, e);
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{p}.{key}"), "must be positive"))
            }
        };
        let nonzero = |key: &str, v: usize| {
            if v > 0 {
                Ok(())
            } else {
                Err(invalid(format!("{p}.{key}"), "must be at least 1"))
            }
        };
        match &self.params {
            Params::Spectrum(s) => {
                s.scheme
                    .validate()
                    .map_err(|e| model_error("params.scheme", e))?;
                s.delta3_mhz.validate("params.delta3_mhz")?;
                positive("n0", s.n0)?;
            }
            Params::Doppler(s) => {
                s.scheme
                    .validate()
                    .map_err(|e| model_error("params.scheme", e))?;
                s.delta3_mhz.validate("params.delta3_mhz")?;
                if !(s.temperature_k >= 0.0) || !s.temperature_k.is_finite() {
                    return Err(invalid("params.temperature_k", "must be non-negative"));
                }
                positive("mass_amu", s.mass_amu)?;
                nonzero("n_velocity_samples", s.n_velocity_samples)?;
                crate::scenarios::doppler_geometry(s)
                    .map_err(|e| model_error("params.geometry", e))?;
            }
            Params::FoersterScan(s) => {
                s.channel
                    .build()
                    .map_err(|e| model_error("params.channel", e))?;
                s.sampler
                    .validate()
                    .map_err(|e| model_error("params.sampler", e))?;
                rydsim::foerster::PairBasis::new(s.atom_count, s.truncation).map_err(m)?;
                nonzero("n_samples", s.n_samples)?;
                s.field_vcm.validate("params.field_vcm")?;
                positive("interaction_time_us", s.interaction_time_us)?;
            }
            Params::FoersterTime(s) => {
                s.channel
                    .build()
                    .map_err(|e| model_error("params.channel", e))?;
                s.sampler
                    .validate()
                    .map_err(|e| model_error("params.sampler", e))?;
                rydsim::foerster::PairBasis::new(s.atom_count, s.truncation).map_err(m)?;
                nonzero("n_samples", s.n_samples)?;
                s.field_vcm.validate("params.field_vcm")?;
                if s.interaction_times_us.is_empty() {
                    return Err(invalid("params.interaction_times_us", "must be nonempty"));
                }
                for (i, t) in s.interaction_times_us.iter().enumerate() {
                    positive(&format!("interaction_times_us[{i}]"), *t)?;
                }
                if s.interaction_times_us.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid(
                        "params.interaction_times_us",
                        "must be strictly increasing",
                    ));
                }
            }
            Params::RfFloquet(s) => {
                s.channel
                    .build()
                    .map_err(|e| model_error("params.channel", e))?;
                s.rf.validate().map_err(|e| model_error("params.rf", e))?;
                let [lo, hi] = s.field_range_vcm;
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(invalid(
                        "params.field_range_vcm",
                        "must be a finite increasing pair",
                    ));
                }
                if let Some(td) = &s.time_domain {
                    positive("time_domain.pair_distance_um", td.pair_distance_um)?;
                    positive("time_domain.interaction_time_us", td.interaction_time_us)?;
                    positive("time_domain.window_vcm", td.window_vcm)?;
                    positive("time_domain.tolerance", td.tolerance)?;
                    if td.points_per_window < 3 {
                        return Err(invalid(
                            "params.time_domain.points_per_window",
                            "must be at least 3",
                        ));
                    }
                }
            }
            Params::BlockadeRevivals(s) => {
                let rabi = s.rabi().map_err(m)?;
                rydsim::blockade::EnsembleParams {
                    n_bar: s.n_bar,
                    radius_um: s.trap_radius_um,
                    profile: s.profile,
                    r_min_um: s.r_min_um,
                    rabi_mhz: rabi,
                    detuning_mhz: s.detuning_mhz,
                    c6_mhz_um6: s.c6_mhz_um6,
                    k_max: s.k_max,
                }
                .validate()
                .map_err(m)?;
                nonzero("n_samples", s.n_samples)?;
                s.time_us.validate("params.time_us")?;
            }
            Params::Chirp(s) => {
                s.chirp
                    .validate()
                    .map_err(|e| model_error("params.chirp", e))?;
                if !s.chirp.crosses_resonance() {
                    return Err(invalid(
                        "params.chirp.sweep_start_mhz",
                        "the sweep must cross zero detuning",
                    ));
                }
                if s.atom_counts.is_empty() || s.atom_counts.contains(&0) {
                    return Err(invalid(
                        "params.atom_counts",
                        "must be a nonempty list of positive counts",
                    ));
                }
            }
            Params::Stirap(s) => {
                s.pulses
                    .validate()
                    .map_err(|e| model_error("params.pulses", e))?;
                s.time_us.validate("params.time_us")?;
                positive("tolerance", s.tolerance)?;
            }
            Params::GateSim(s) => {
                positive("rabi_mhz", s.rabi_mhz)?;
                if s.b_over_rabi.is_empty()
                    || s.b_over_rabi.iter().any(|b| !(*b >= 0.0) || !b.is_finite())
                {
                    return Err(invalid(
                        "params.b_over_rabi",
                        "must be a nonempty list of non-negative values",
                    ));
                }
                if !(s.truth_table_b_over_rabi >= 0.0) || !s.truth_table_b_over_rabi.is_finite() {
                    return Err(invalid(
                        "params.truth_table_b_over_rabi",
                        "must be non-negative",
                    ));
                }
            }
            Params::MesoscopicGate(s) => {
                s.chirp
                    .validate()
                    .map_err(|e| model_error("params.chirp", e))?;
                if !s.alpha_rad.is_finite() {
                    return Err(invalid("params.alpha_rad", "must be finite"));
                }
                if s.atom_counts.is_empty() || s.atom_counts.contains(&0) {
                    return Err(invalid(
                        "params.atom_counts",
                        "must be a nonempty list of positive counts",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parses a `path=value` override. The value is read as JSON when possible
/// (numbers, booleans, `null`, quoted strings) and as a bare string otherwise.
pub fn parse_override(arg: &str) -> Result<(Vec<String>, Value), ConfigError> {
    let err = |reason: &str| ConfigError::Override {
        arg: arg.to_string(),
        reason: reason.to_string(),
    };
    let (path, value) = arg
        .split_once('=')
        .ok_or_else(|| err("expected `path=value`"))?;
    let keys: Vec<String> = path.split('.').map(str::to_string).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(err("empty path component"));
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    if value.is_object() || value.is_array() {
        return Err(err("only scalar values can be set"));
    }
    Ok((keys, value))
}

/// Sets a scalar leaf, creating intermediate objects as needed. Numeric path
/// components index into arrays. Replacing an object or array is refused.
pub fn apply_override(doc: &mut Value, arg: &str) -> Result<(), ConfigError> {
    let (keys, value) = parse_override(arg)?;
    let err = |reason: String| ConfigError::Override {
        arg: arg.to_string(),
        reason,
    };
    let mut node = doc;
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        node = match node {
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| err(format!("`{key}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| err(format!("index {i} out of range (length {len})")))?
            }
            Value::Object(map) => map.entry(key.clone()).or_insert_with(|| {
                if last {
                    Value::Null
                } else {
                    Value::Object(Default::default())
                }
            }),
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut()
                    .expect("just created")
                    .entry(key.clone())
                    .or_insert(Value::Null)
            }
            _ => return Err(err(format!("`{key}` has a scalar parent"))),
        };
    }
    if node.is_object() || node.is_array() {
        return Err(err("target is not a scalar leaf".to_string()));
    }
    *node = value;
    Ok(())
}

/// Reads, overrides, resolves and validates a configuration file.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path, overrides)
}

pub fn parse_config(
    text: &str,
    path: &Path,
    overrides: &[String],
) -> Result<ScenarioConfig, ConfigError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    ScenarioConfig::from_value(doc)
}
