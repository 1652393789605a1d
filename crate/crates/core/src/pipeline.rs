//! One configuration document for the whole chain: mission generation,
//! flight simulation, logger emulation and sizing figures.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::airframe::{self, AirframeConfig};
use crate::atmosphere::AtmosphereModel;
use crate::error::{Error, Result};
use crate::firmware::{self, EmulationLog, EmulationOptions, FirmwareConfig, SdCardImage};
use crate::flightsim::{self, Environment, SensorNoise, SimOptions, Trajectory};
use crate::mission::{self, MissionPlan, SoundingPattern};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// Design figures requested by `sizing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingOptions {
    /// m
    pub design_altitude: f64,
    /// Thrust the aircraft must still produce at the design altitude, as a
    /// multiple of its weight.
    pub thrust_margin: f64,
    /// Share of the pack used before landing.
    pub usable_fraction: f64,
    /// Time spent drifting while the wind exceeds the top speed, s.
    pub drift_duration: f64,
}

impl Default for SizingOptions {
    fn default() -> Self {
        Self {
            design_altitude: 6096.0,
            thrust_margin: 1.5,
            usable_fraction: 0.8,
            drift_duration: 180.0,
        }
    }
}

fn default_airframe() -> AirframeConfig {
    AirframeConfig::reference()
}

fn default_environment() -> Environment {
    Environment {
        wind: 10.0,
        rng_seed: 42,
        sensor_noise_sd: SensorNoise {
            temperature: 0.1,
            humidity: 0.5,
            pressure: 2.0,
        },
        ..Environment::standard_day()
    }
}

/// Logger settings for a launch from the station itself: the altimeter
/// reads zero on the ground.
fn default_firmware() -> FirmwareConfig {
    FirmwareConfig {
        elevation: 0.0,
        ..FirmwareConfig::default()
    }
}

fn default_mission() -> SoundingPattern {
    SoundingPattern::new(40.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_airframe")]
    pub airframe: AirframeConfig,
    #[serde(default = "default_environment")]
    pub environment: Environment,
    #[serde(default = "default_firmware")]
    pub firmware: FirmwareConfig,
    #[serde(default = "default_mission")]
    pub mission: SoundingPattern,
    #[serde(default)]
    pub sim: SimOptions,
    #[serde(default)]
    pub emulation: EmulationOptions,
    #[serde(default)]
    pub sizing: SizingOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            airframe: default_airframe(),
            environment: default_environment(),
            firmware: default_firmware(),
            mission: default_mission(),
            sim: SimOptions::default(),
            emulation: EmulationOptions::default(),
            sizing: SizingOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        };
        self.airframe.validate().map_err(as_config)?;
        self.environment.validate().map_err(as_config)?;
        self.firmware.validate().map_err(as_config)?;
        self.mission.levels().map_err(as_config)?;
        let s = &self.sizing;
        if !(s.thrust_margin > 0.0 && s.design_altitude >= 0.0 && s.drift_duration >= 0.0) {
            return Err(Error::Config("sizing values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub plan: MissionPlan,
    pub trajectory: Trajectory,
    pub log: EmulationLog,
    pub sd: SdCardImage,
}

/// Generates the mission, flies it and runs the logger along the flight.
pub fn simulate(cfg: &RunConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let plan = mission::generate_sounding_profile(&cfg.mission)?;
    let trajectory = flightsim::run_mission(&plan, &cfg.airframe, &cfg.environment, &cfg.sim)?;
    trajectory.check_completed()?;
    let mut sd = SdCardImage::new();
    let log = firmware::emulate_flight(
        &cfg.firmware,
        &cfg.emulation,
        &trajectory,
        &cfg.environment,
        &mut sd,
    )?;
    log::info!(
        "flight {:.1} s, {} ground rows, {} air rows",
        trajectory.duration(),
        log.ground_rows.len(),
        log.air_rows.len()
    );
    Ok(SimulationOutput {
        plan,
        trajectory,
        log,
        sd,
    })
}

/// Runs [`simulate`] and writes the card image plus `trajectory.csv` into `out`.
pub fn simulate_to_dir(cfg: &RunConfig, out: &Path) -> Result<SimulationOutput> {
    let result = simulate(cfg)?;
    result.sd.save_to_dir(out)?;
    fs::write(out.join(TRAJECTORY_FILE), result.trajectory.to_csv())?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub beaufort: u8,
    pub wind_kmh: f64,
    pub drift_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub thrust_to_weight: f64,
    /// m
    pub service_ceiling: Option<f64>,
    pub design_altitude: f64,
    /// Sea-level static thrust needed for the margin at the design altitude, g.
    pub required_static_thrust: f64,
    pub required_per_motor: f64,
    /// km/h
    pub max_progressive_speed: Option<f64>,
    pub drift: Vec<DriftRow>,
    /// A
    pub battery_max_load: f64,
    /// s
    pub endurance: Option<f64>,
    pub expected_flights: Option<u64>,
}

pub fn sizing(cfg: &RunConfig) -> Result<SizingReport> {
    cfg.validate()?;
    let a = &cfg.airframe;
    let s = &cfg.sizing;
    let atmo = AtmosphereModel::isa();
    let required =
        airframe::required_static_thrust(a.total_mass * s.thrust_margin, s.design_altitude, &atmo)?;
    let vmax = airframe::max_progressive_speed(a).ok();
    let drift = (9..=12)
        .map(|b| {
            let wind = airframe::beaufort_to_kmh(b)?;
            Ok(DriftRow {
                beaufort: b,
                wind_kmh: wind,
                drift_m: vmax.map_or(f64::NAN, |v| {
                    airframe::wind_drift(wind, v, s.drift_duration)
                }),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let endurance = airframe::endurance(&a.battery, a.hover_current, s.usable_fraction).ok();
    Ok(SizingReport {
        thrust_to_weight: airframe::thrust_to_weight(a),
        service_ceiling: airframe::service_ceiling(a, &atmo).ok(),
        design_altitude: s.design_altitude,
        required_static_thrust: required,
        required_per_motor: required / a.n_motors as f64,
        max_progressive_speed: vmax,
        drift,
        battery_max_load: airframe::battery_max_load(&a.battery),
        endurance,
        expected_flights: endurance
            .and_then(|e| airframe::expected_flights(a.mtbf_hours, e / 60.0).ok()),
    })
}
