//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown keys and unparsable values are errors that carry the line number.
//! [`RunConfig::emit`] writes every key at full precision; parsing that text
//! back yields an identical configuration.
//!
//! | key | default | unit |
//! |---|---|---|
//! | `orbit.earth_radius_km` | 6371 | km |
//! | `orbit.altitude_km` | 500 | km |
//! | `orbit.mu_km3_s2` | 398600 | km³/s² |
//! | `link.wavelength_m` | 7.95e-7 | m |
//! | `link.divergence_rad` | 3e-6 | rad, half angle |
//! | `link.jitter_rad` | 1e-6 | rad, rms |
//! | `link.receiver_diameter_m` | 1.0 | m |
//! | `link.zenith_transmission` | 0.8 | |
//! | `link.cn2` | 1.7e-14 | m^(-2/3), inert |
//! | `link.scale_height_m` | 1500 | m, inert |
//! | `link.humidity` | 0.6 | inert |
//! | `stages.source` | 0.2 | |
//! | `stages.detector` | 0.7 | |
//! | `stages.bsm` | 0.5 | |
//! | `stages.qnd` | 0.8 | |
//! | `stages.memory` | 0.74 | |
//! | `qkd.rate_hz` | 9e7 | Hz |
//! | `qkd.qber_x`, `qkd.qber_z` | 0.0965733 | |
//! | `qkd.ec_inefficiency` | 1.1 | |
//! | `qkd.herald_probability` | 1 | |
//! | `qkd.modes` | 112 | |
//! | `qkd.memory_lifetime_s` | 3600 | s |
//! | `scenario.dual_elevation_rad` | 0.349066 (20°) | rad |
//! | `scenario.dual_slant_range_km` | 1461.9 | km |
//! | `scenario.buffered_elevation_rad` | 1.5708 (90°) | rad |
//! | `scenario.buffered_slant_range_km` | 500 | km |
//! | `scenario.ogs_separation_km` | 3267.9 | km |
//! | `afc.total_bandwidth_hz` | 2.7e10 | Hz |
//! | `afc.tooth_spacing_hz` | 9.6e7 | Hz |
//! | `afc.tooth_width_hz` | 1.2e7 | Hz |
//! | `afc.homogeneous_linewidth_hz` | 5.96e6 | Hz |
//! | `cavity.decay`, `cavity.coupling` | 1 | s⁻¹ |
//! | `ensemble.*` | rescaled preset | s⁻¹, m²/s, m, cm⁻³ |
//! | `memory.dark_interval_s` | 463 | s |
//! | `memory.pulse_duration_s` | 1e-6 | s |
//! | `memory.rabi_frequency` | 1e9 | s⁻¹ |
//! | `memory.samples` | 201 | |
//! | `memory.grid_points` | 256 | |
//! | `memory.field_model` | `spin-only` | `spin-only`, `three-field` |
//! | `memory.initial_profile` | `uniform` | `uniform`, `fundamental` |
//! | `solver.rtol`, `solver.atol` | 1e-8, 1e-10 | |
//! | `solver.max_steps` | 50000000 | |
//! | `output.dir` | `.` | path |
//! | `output.format` | `markdown` | `csv`, `markdown`, `text` |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::afc::{AFCParams, CavityParams, EnsembleParams};
use crate::error::{Error, Result};
use crate::format::fmt_full;
use crate::geometry::OrbitalConfig;
use crate::linkbudget::{OpticalLinkParams, StageEfficiencies};
use crate::scenario::ScenarioConfig;
use crate::skr::QKDParams;
use crate::spindyn::{FieldModel, InitialProfile, ProtocolSchedule, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    #[default]
    Markdown,
    Text,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" => Ok(Self::Markdown),
            "text" => Ok(Self::Text),
            _ => Err(format!("expected csv, markdown or text, got `{s}`")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Markdown => "markdown",
            Self::Text => "text",
        })
    }
}

/// Named ensemble parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperLiteral,
    Rescaled,
    Lossless,
}

impl Preset {
    pub fn ensemble(self) -> EnsembleParams {
        match self {
            Self::PaperLiteral => EnsembleParams::paper_literal(),
            Self::Rescaled => EnsembleParams::rescaled(),
            Self::Lossless => EnsembleParams::lossless(),
        }
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper-literal" => Ok(Self::PaperLiteral),
            "rescaled" => Ok(Self::Rescaled),
            "lossless" => Ok(Self::Lossless),
            _ => Err(format!("expected paper-literal, rescaled or lossless, got `{s}`")),
        }
    }
}

/// Atmospheric turbulence figures; carried through but not used by any model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turbulence {
    pub cn2: f64,
    pub scale_height: f64,
    pub humidity: f64,
}

impl Default for Turbulence {
    fn default() -> Self {
        Self {
            cn2: 1.7e-14,
            scale_height: 1500.0,
            humidity: 0.60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryRun {
    pub dark_interval: f64,
    pub pulse_duration: f64,
    pub rabi_frequency: f64,
    pub samples: usize,
    pub grid_points: usize,
}

impl Default for MemoryRun {
    fn default() -> Self {
        Self {
            dark_interval: 463.0,
            pulse_duration: 1e-6,
            rabi_frequency: 1e9,
            samples: 201,
            grid_points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub stages: StageEfficiencies,
    pub bsm_efficiency: f64,
    pub qnd_efficiency: f64,
    pub turbulence: Turbulence,
    pub afc: AFCParams,
    pub cavity: CavityParams,
    pub ensemble: EnsembleParams,
    pub memory: MemoryRun,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            stages: StageEfficiencies::default(),
            bsm_efficiency: 0.50,
            qnd_efficiency: 0.80,
            turbulence: Turbulence::default(),
            afc: AFCParams::default(),
            cavity: CavityParams::default(),
            ensemble: EnsembleParams::rescaled(),
            memory: MemoryRun::default(),
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("."),
            format: OutputFormat::default(),
        }
    }
}

type Getter = fn(&RunConfig) -> String;
type Setter = fn(&mut RunConfig, &str) -> std::result::Result<(), String>;

struct Field {
    key: &'static str,
    get: Getter,
    set: Setter,
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn parse_int<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("`{v}` is not a non-negative integer"))
}

/// `f64` field stored in `$($path).+`, shown as stored value times `$scale`.
macro_rules! num {
    ($key:literal, $($path:ident).+) => {
        num!($key, $($path).+, 1.0)
    };
    ($key:literal, $($path:ident).+, $scale:expr) => {
        Field {
            key: $key,
            get: |c| fmt_full(c.$($path).+ * $scale),
            set: |c, v| {
                c.$($path).+ = parse_f64(v)? / $scale;
                Ok(())
            },
        }
    };
}

macro_rules! int {
    ($key:literal, $($path:ident).+) => {
        Field {
            key: $key,
            get: |c| c.$($path).+.to_string(),
            set: |c, v| {
                c.$($path).+ = parse_int(v)?;
                Ok(())
            },
        }
    };
}

const FIELDS: &[Field] = &[
    num!("orbit.earth_radius_km", scenario.orbit.earth_radius),
    num!("orbit.altitude_km", scenario.orbit.altitude),
    num!("orbit.mu_km3_s2", scenario.orbit.gravitational_parameter),
    Field {
        key: "link.wavelength_m",
        get: |c| fmt_full(c.scenario.link.wavelength),
        set: |c, v| {
            let l = &mut c.scenario.link;
            l.wavelength = parse_f64(v)?;
            l.beam_waist = l.wavelength / (std::f64::consts::PI * l.divergence_half_angle);
            Ok(())
        },
    },
    Field {
        key: "link.divergence_rad",
        get: |c| fmt_full(c.scenario.link.divergence_half_angle),
        set: |c, v| {
            let l = &mut c.scenario.link;
            l.divergence_half_angle = parse_f64(v)?;
            l.beam_waist = l.wavelength / (std::f64::consts::PI * l.divergence_half_angle);
            Ok(())
        },
    },
    num!("link.jitter_rad", scenario.link.pointing_jitter_rms),
    num!("link.receiver_diameter_m", scenario.link.receiver_radius, 2.0),
    num!("link.zenith_transmission", scenario.link.zenith_transmission),
    num!("link.cn2", turbulence.cn2),
    num!("link.scale_height_m", turbulence.scale_height),
    num!("link.humidity", turbulence.humidity),
    num!("stages.source", stages.source),
    Field {
        key: "stages.detector",
        get: |c| fmt_full(c.scenario.detector_efficiency),
        set: |c, v| {
            let x = parse_f64(v)?;
            c.scenario.detector_efficiency = x;
            c.stages.detector = x;
            Ok(())
        },
    },
    num!("stages.bsm", bsm_efficiency),
    num!("stages.qnd", qnd_efficiency),
    Field {
        key: "stages.memory",
        get: |c| fmt_full(c.scenario.eta_mem),
        set: |c, v| {
            let x = parse_f64(v)?;
            c.scenario.eta_mem = x;
            c.stages.memory = x;
            Ok(())
        },
    },
    num!("qkd.rate_hz", scenario.qkd.channel_use_rate),
    num!("qkd.qber_x", scenario.qkd.qber_x),
    num!("qkd.qber_z", scenario.qkd.qber_z),
    num!("qkd.ec_inefficiency", scenario.qkd.ec_inefficiency),
    num!("qkd.herald_probability", scenario.qkd.herald_probability),
    int!("qkd.modes", scenario.qkd.mode_count),
    num!("qkd.memory_lifetime_s", scenario.qkd.memory_lifetime),
    num!("scenario.dual_elevation_rad", scenario.dual_elevation),
    num!("scenario.dual_slant_range_km", scenario.dual_slant_range),
    num!("scenario.buffered_elevation_rad", scenario.buffered_elevation),
    num!("scenario.buffered_slant_range_km", scenario.buffered_slant_range),
    num!("scenario.ogs_separation_km", scenario.ogs_separation),
    num!("afc.total_bandwidth_hz", afc.total_bandwidth),
    num!("afc.tooth_spacing_hz", afc.tooth_spacing),
    num!("afc.tooth_width_hz", afc.tooth_width),
    num!("afc.homogeneous_linewidth_hz", afc.homogeneous_linewidth),
    num!("cavity.decay", cavity.cavity_decay),
    num!("cavity.coupling", cavity.ensemble_coupling),
    num!("ensemble.exchange_coupling", ensemble.exchange_coupling),
    num!("ensemble.alkali_decay", ensemble.alkali_decay),
    num!("ensemble.noble_decay", ensemble.noble_decay),
    num!("ensemble.alkali_detuning", ensemble.alkali_detuning),
    num!("ensemble.noble_detuning", ensemble.noble_detuning),
    num!("ensemble.alkali_diffusion_m2_s", ensemble.alkali_diffusion),
    num!("ensemble.noble_diffusion_m2_s", ensemble.noble_diffusion),
    num!("ensemble.cell_radius_m", ensemble.cell_radius),
    num!("ensemble.alkali_density_cm3", ensemble.alkali_density),
    num!("ensemble.noble_density_cm3", ensemble.noble_density),
    num!("ensemble.optical_decay", ensemble.optical_decay),
    num!("memory.dark_interval_s", memory.dark_interval),
    num!("memory.pulse_duration_s", memory.pulse_duration),
    num!("memory.rabi_frequency", memory.rabi_frequency),
    int!("memory.samples", memory.samples),
    int!("memory.grid_points", memory.grid_points),
    Field {
        key: "memory.field_model",
        get: |c| {
            match c.solver.field_model {
                FieldModel::SpinOnly => "spin-only",
                FieldModel::ThreeField => "three-field",
            }
            .into()
        },
        set: |c, v| {
            c.solver.field_model = match v {
                "spin-only" => FieldModel::SpinOnly,
                "three-field" => FieldModel::ThreeField,
                _ => return Err(format!("expected spin-only or three-field, got `{v}`")),
            };
            Ok(())
        },
    },
    Field {
        key: "memory.initial_profile",
        get: |c| {
            match c.solver.initial_profile {
                InitialProfile::Uniform => "uniform",
                InitialProfile::FundamentalMode => "fundamental",
            }
            .into()
        },
        set: |c, v| {
            c.solver.initial_profile = match v {
                "uniform" => InitialProfile::Uniform,
                "fundamental" => InitialProfile::FundamentalMode,
                _ => return Err(format!("expected uniform or fundamental, got `{v}`")),
            };
            Ok(())
        },
    },
    num!("solver.rtol", solver.relative_tolerance),
    num!("solver.atol", solver.absolute_tolerance),
    int!("solver.max_steps", solver.max_steps),
    Field {
        key: "output.dir",
        get: |c| c.output_dir.display().to_string(),
        set: |c, v| {
            if v.is_empty() {
                return Err("empty path".into());
            }
            c.output_dir = PathBuf::from(v);
            Ok(())
        },
    },
    Field {
        key: "output.format",
        get: |c| c.format.to_string(),
        set: |c, v| {
            c.format = v.parse()?;
            Ok(())
        },
    },
];

fn field(key: &str) -> Option<&'static Field> {
    FIELDS.iter().find(|f| f.key == key)
}

impl RunConfig {
    /// All recognised keys, in emission order.
    pub fn keys() -> impl Iterator<Item = &'static str> {
        FIELDS.iter().map(|f| f.key)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: idx + 1,
                    key: line.to_string(),
                    detail: "expected `key = value`".into(),
                });
            };
            self.apply_at(idx + 1, key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets a single key; reported errors carry line 0.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply_at(0, key, value)
    }

    fn apply_at(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let f = field(key).ok_or_else(|| Error::Config {
            line,
            key: key.to_string(),
            detail: "unknown key".into(),
        })?;
        (f.set)(self, value).map_err(|detail| Error::Config {
            line,
            key: key.to_string(),
            detail,
        })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        field(key).map(|f| (f.get)(self))
    }

    /// Every key with its current value, one per line.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        for f in FIELDS {
            s.push_str(f.key);
            s.push_str(" = ");
            s.push_str(&(f.get)(self));
            s.push('\n');
        }
        s
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        self.ensemble = preset.ensemble();
    }

    pub fn link(&self) -> OpticalLinkParams {
        self.scenario.link
    }

    pub fn orbit(&self) -> OrbitalConfig {
        self.scenario.orbit
    }

    pub fn qkd(&self) -> QKDParams {
        self.scenario.qkd
    }

    pub fn schedule(&self) -> ProtocolSchedule {
        ProtocolSchedule {
            dark_interval: self.memory.dark_interval,
            pulse_duration: self.memory.pulse_duration,
            rabi_frequency: self.memory.rabi_frequency,
            comb_bandwidth: self.afc.total_bandwidth,
            sample_count: self.memory.samples,
            ..ProtocolSchedule::full_transfer(&self.ensemble, self.memory.dark_interval)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.afc.validate()?;
        self.ensemble.validate()?;
        self.solver.validate()?;
        self.schedule().validate()
    }
}
