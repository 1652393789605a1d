//! Deterministic vertical flight of a mission through a configurable
//! atmosphere.
//!
//! The aircraft only moves along the vertical axis. Horizontal motion is
//! reduced to the downwind landing offset. Thrust is the rated sea-level
//! static thrust scaled by throttle and by the local density relative to
//! ISA sea level. Integration is semi-implicit Euler, velocity first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::airframe::{self, AirframeConfig};
use crate::atmosphere::{AtmosphereModel, STANDARD_GRAVITY};
use crate::error::{Error, Result};
use crate::mission::{self, CommandKind, MissionPlan};

const GAS_CONSTANT: f64 = 287.053;
const KELVIN: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorNoise {
    /// °C
    #[serde(default)]
    pub temperature: f64,
    /// %
    #[serde(default)]
    pub humidity: f64,
    /// Pa
    #[serde(default)]
    pub pressure: f64,
}

/// The air column the aircraft climbs through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    /// °C
    pub surface_temperature: f64,
    /// hPa, at the launch site
    pub surface_pressure: f64,
    /// %
    pub surface_humidity: f64,
    /// Temperature decrease per metre of height, °C/m.
    pub temperature_lapse: f64,
    /// Relative humidity decrease per metre of height, %/m.
    pub humidity_lapse: f64,
    /// km/h
    pub wind: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub sensor_noise_sd: SensorNoise,
}

impl Default for Environment {
    fn default() -> Self {
        Self::standard_day()
    }
}

impl Environment {
    /// Calm ISA sea-level day: 15 °C, 1013.25 hPa, 6.5 °C/km lapse, no sensor noise.
    pub fn standard_day() -> Self {
        Self {
            surface_temperature: 15.0,
            surface_pressure: 1013.25,
            surface_humidity: 60.0,
            temperature_lapse: 0.0065,
            humidity_lapse: 0.05,
            wind: 0.0,
            rng_seed: 0,
            sensor_noise_sd: SensorNoise::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.surface_temperature,
            self.surface_pressure,
            self.surface_humidity,
            self.temperature_lapse,
            self.humidity_lapse,
            self.wind,
            self.sensor_noise_sd.temperature,
            self.sensor_noise_sd.humidity,
            self.sensor_noise_sd.pressure,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("environment values must be finite".into()));
        }
        if !(self.surface_pressure > 0.0) {
            return Err(Error::Config(
                "environment.surface_pressure must be positive".into(),
            ));
        }
        if self.surface_temperature <= -KELVIN {
            return Err(Error::Config(
                "environment.surface_temperature below absolute zero".into(),
            ));
        }
        if !(0.0..=100.0).contains(&self.surface_humidity) {
            return Err(Error::Config(
                "environment.surface_humidity must lie in [0, 100]".into(),
            ));
        }
        if self.wind < 0.0 {
            return Err(Error::Config(
                "environment.wind must be non-negative".into(),
            ));
        }
        let n = self.sensor_noise_sd;
        if n.temperature < 0.0 || n.humidity < 0.0 || n.pressure < 0.0 {
            return Err(Error::Config(
                "sensor noise deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// °C
    pub fn temperature(&self, h: f64) -> f64 {
        self.surface_temperature - self.temperature_lapse * h
    }

    /// %, clamped to the physical range.
    pub fn humidity(&self, h: f64) -> f64 {
        (self.surface_humidity - self.humidity_lapse * h).clamp(0.0, 100.0)
    }

    /// Hydrostatic pressure anchored at the surface value, Pa.
    pub fn pressure(&self, h: f64) -> f64 {
        let p0 = self.surface_pressure * 100.0;
        let t0 = self.surface_temperature + KELVIN;
        let lapse = self.temperature_lapse;
        if lapse.abs() < 1e-12 {
            return p0 * (-STANDARD_GRAVITY * h / (GAS_CONSTANT * t0)).exp();
        }
        let base = 1.0 - lapse * h / t0;
        if base <= 0.0 {
            return 0.0;
        }
        p0 * base.powf(STANDARD_GRAVITY / (GAS_CONSTANT * lapse))
    }

    /// kg/m³
    pub fn density(&self, h: f64) -> f64 {
        let t = self.temperature(h) + KELVIN;
        if t <= 0.0 {
            return 0.0;
        }
        self.pressure(h) / (GAS_CONSTANT * t)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }
}

/// What the on-board sensors report, before any firmware processing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawReading {
    /// °C
    pub temperature: f64,
    /// %
    pub humidity: f64,
    /// Pa
    pub pressure: f64,
}

/// Ground-truth reading at `altitude`, plus Gaussian noise from `rng`.
///
/// Three normal draws are consumed per call whatever the deviations are, so
/// the random stream lines up across configurations.
pub fn true_sample(env: &Environment, altitude: f64, rng: &mut impl Rng) -> RawReading {
    let h = altitude.max(0.0);
    let sd = env.sensor_noise_sd;
    let mut noise = |sd: f64| {
        let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
        z * sd
    };
    let temperature = env.temperature(h) + noise(sd.temperature);
    let humidity = (env.humidity(h) + noise(sd.humidity)).clamp(0.0, 100.0);
    let pressure = (env.pressure(h) + noise(sd.pressure)).max(1.0);
    RawReading {
        temperature,
        humidity,
        pressure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraEvent {
    /// s since takeoff
    pub t: f64,
    /// m AGL
    pub altitude: f64,
    /// deg
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub altitude: f64,
    pub vertical_speed: f64,
    pub heading: f64,
    /// mAh
    pub battery_remaining: f64,
    pub camera_events: Vec<CameraEvent>,
}

impl SimState {
    pub fn on_ground(cfg: &AirframeConfig) -> Self {
        Self {
            t: 0.0,
            altitude: 0.0,
            vertical_speed: 0.0,
            heading: 0.0,
            battery_remaining: cfg.battery.capacity,
            camera_events: Vec::new(),
        }
    }
}

/// Full-throttle thrust of all motors at height `h` in `env`, N.
pub fn available_thrust(cfg: &AirframeConfig, env: &Environment, h: f64) -> f64 {
    let ratio = env.density(h.max(0.0)) / AtmosphereModel::isa().sea_level_density();
    cfg.max_thrust_newtons() * ratio
}

/// Throttle that balances weight at sea level.
pub fn sea_level_hover_throttle(cfg: &AirframeConfig) -> f64 {
    1.0 / airframe::thrust_to_weight(cfg)
}

/// Pack current at `throttle`: `I_hover·(throttle/throttle_hover)^1.5`, A.
pub fn current_draw(cfg: &AirframeConfig, throttle: f64) -> f64 {
    cfg.hover_current * (throttle / sea_level_hover_throttle(cfg)).powf(1.5)
}

/// Advances the vertical dynamics by `dt` seconds.
pub fn step(
    state: &SimState,
    cfg: &AirframeConfig,
    env: &Environment,
    throttle: f64,
    dt: f64,
) -> SimState {
    debug_assert!(dt > 0.0 && dt <= 0.1);
    let throttle = throttle.clamp(0.0, 1.0);
    let m = cfg.mass_kg();
    let v = state.vertical_speed;
    let thrust = throttle * available_thrust(cfg, env, state.altitude);
    let drag = cfg.frame_drag_coefficient * v * v.abs();
    let accel = (thrust - m * STANDARD_GRAVITY - drag) / m;

    let mut next = state.clone();
    next.t = state.t + dt;
    next.vertical_speed = v + accel * dt;
    next.altitude = state.altitude + next.vertical_speed * dt;
    if next.altitude <= 0.0 {
        next.altitude = 0.0;
        next.vertical_speed = next.vertical_speed.max(0.0);
    }
    let used_mah = current_draw(cfg, throttle) * dt / 3.6;
    next.battery_remaining = (state.battery_remaining - used_mah).max(0.0);
    next
}

/// Steady full-throttle climb speed at height `h`, where thrust less
/// weight equals vertical drag, m/s. Zero at or above the ceiling.
pub fn terminal_climb_speed(cfg: &AirframeConfig, env: &Environment, h: f64) -> f64 {
    let excess = available_thrust(cfg, env, h) - cfg.weight_newtons();
    if excess <= 0.0 {
        return 0.0;
    }
    if cfg.frame_drag_coefficient == 0.0 {
        return f64::INFINITY;
    }
    (excess / cfg.frame_drag_coefficient).sqrt()
}

/// Time for a full-throttle climb from the ground to `target` m, s.
/// `None` when the climb stalls below the target or exceeds `max_time`.
pub fn time_to_altitude(
    cfg: &AirframeConfig,
    env: &Environment,
    target: f64,
    dt: f64,
    max_time: f64,
) -> Option<f64> {
    let mut s = SimState::on_ground(cfg);
    while s.t < max_time {
        s = step(&s, cfg, env, 1.0, dt);
        if s.altitude >= target {
            return Some(s.t);
        }
        if s.t > 1.0 && s.vertical_speed < 1e-3 {
            return None;
        }
    }
    None
}

/// Controller and integration settings for [`run_mission`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    /// s
    pub dt: f64,
    /// Commanded climb rate per metre of altitude error, 1/s.
    pub altitude_gain: f64,
    /// Throttle per m/s of climb-rate error.
    pub speed_gain: f64,
    /// m
    pub deadband: f64,
    /// m/s
    pub max_climb_rate: f64,
    /// m/s
    pub max_descent_rate: f64,
    /// Minimum sink rate while landing, m/s.
    pub touchdown_rate: f64,
    /// Keep one trajectory sample every this many steps.
    pub record_every: usize,
    /// Abort if the mission runs longer than this, s.
    pub max_time: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            altitude_gain: 0.5,
            speed_gain: 0.2,
            deadband: 0.2,
            max_climb_rate: 5.0,
            max_descent_rate: 3.0,
            touchdown_rate: 0.5,
            record_every: 10,
            max_time: 3600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub altitude: f64,
    pub vertical_speed: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub camera_events: Vec<CameraEvent>,
    /// Downwind distance between takeoff and touchdown, m.
    pub landing_offset: f64,
    /// Best level forward speed used for the drift estimate, km/h.
    pub max_progressive_speed: f64,
    /// mAh left at touchdown.
    pub battery_remaining: f64,
    /// Set when the pack ran flat in the air; the trajectory stops there.
    pub battery_exhausted_at: Option<f64>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn max_altitude(&self) -> f64 {
        self.samples.iter().map(|s| s.altitude).fold(0.0, f64::max)
    }

    /// Altitude at time `t`, linearly interpolated between samples and
    /// zero outside the flight.
    pub fn altitude_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if s.is_empty() || t <= s[0].t || t >= s[s.len() - 1].t {
            return s
                .iter()
                .find(|x| (x.t - t).abs() < 1e-12)
                .map_or(0.0, |x| x.altitude);
        }
        let i = s.partition_point(|x| x.t <= t);
        let (a, b) = (s[i - 1], s[i]);
        let w = (t - a.t) / (b.t - a.t);
        a.altitude + w * (b.altitude - a.altitude)
    }

    /// Errors if the flight ended with a flat battery.
    pub fn check_completed(&self) -> Result<()> {
        match self.battery_exhausted_at {
            Some(t) => Err(Error::Simulation(format!(
                "battery exhausted at t={t:.1} s, altitude {:.1} m",
                self.samples.last().map_or(0.0, |s| s.altitude)
            ))),
            None => Ok(()),
        }
    }

    /// `t,altitude,vertical_speed,heading` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,altitude,vertical_speed,heading\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.2},{:.3},{:.3},{:.1}\n",
                s.t, s.altitude, s.vertical_speed, s.heading
            ));
        }
        out
    }

    pub fn camera_manifest_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.camera_events)?)
    }
}

struct Runner<'a> {
    cfg: &'a AirframeConfig,
    env: &'a Environment,
    opts: SimOptions,
    state: SimState,
    target: f64,
    samples: Vec<TrajectorySample>,
    steps: usize,
    exhausted_at: Option<f64>,
}

impl Runner<'_> {
    fn throttle_for(&self, commanded_rate: f64) -> f64 {
        let h = self.state.altitude;
        let available = available_thrust(self.cfg, self.env, h);
        let feed_forward = if available > 0.0 {
            (self.cfg.weight_newtons()
                + self.cfg.frame_drag_coefficient * commanded_rate * commanded_rate.abs())
                / available
        } else {
            1.0
        };
        let err = commanded_rate - self.state.vertical_speed;
        (feed_forward + self.opts.speed_gain * err).clamp(0.0, 1.0)
    }

    fn record(&mut self) {
        let s = &self.state;
        self.samples.push(TrajectorySample {
            t: s.t,
            altitude: s.altitude,
            vertical_speed: s.vertical_speed,
            heading: s.heading,
        });
    }

    /// One controller + dynamics step. Returns false once the flight must stop.
    fn advance(&mut self, commanded_rate: f64) -> bool {
        let throttle = self.throttle_for(commanded_rate);
        self.state = step(&self.state, self.cfg, self.env, throttle, self.opts.dt);
        self.steps += 1;
        if self.steps % self.opts.record_every.max(1) == 0 {
            self.record();
        }
        if self.state.battery_remaining <= 0.0 && self.state.altitude > 0.0 {
            self.exhausted_at = Some(self.state.t);
            return false;
        }
        self.state.t < self.opts.max_time
    }

    fn hold_rate(&self) -> f64 {
        let err = self.target - self.state.altitude;
        (self.opts.altitude_gain * err).clamp(-self.opts.max_descent_rate, self.opts.max_climb_rate)
    }

    fn fly_to(&mut self, alt: f64) -> bool {
        self.target = alt;
        loop {
            let err = self.target - self.state.altitude;
            // settle inside half the deadband so the hold starts well within it
            if err.abs() <= 0.5 * self.opts.deadband && self.state.vertical_speed.abs() <= 0.5 {
                if self.samples.last().map(|s| s.t) != Some(self.state.t) {
                    self.record();
                }
                return true;
            }
            if !self.advance(self.hold_rate()) {
                return false;
            }
        }
    }

    fn hold(&mut self, seconds: f64) -> bool {
        let end = self.state.t + seconds;
        while self.state.t + 1e-9 < end {
            if !self.advance(self.hold_rate()) {
                return false;
            }
        }
        true
    }

    fn land(&mut self) -> bool {
        self.target = 0.0;
        while self.state.altitude > 0.0 {
            let rate = self.hold_rate().min(-self.opts.touchdown_rate);
            if !self.advance(rate) {
                return false;
            }
        }
        self.state.vertical_speed = 0.0;
        true
    }
}

/// Flies `plan` from the ground to touchdown.
///
/// TAKEOFF and WAYPOINT climb or descend to their altitude under a
/// proportional altitude loop (commanded climb rate = gain × error, inside
/// the configured rate limits) wrapped around a climb-rate loop with
/// hover feed-forward. A waypoint then holds for `p1` seconds. DELAY holds
/// altitude for `p1` seconds, CONDITION_YAW turns instantly, and
/// DO_DIGICAM_CONTROL records a camera event.
pub fn run_mission(
    plan: &MissionPlan,
    cfg: &AirframeConfig,
    env: &Environment,
    opts: &SimOptions,
) -> Result<Trajectory> {
    cfg.validate()?;
    env.validate()?;
    if !(opts.dt > 0.0 && opts.dt <= 0.1) {
        return Err(Error::Config(format!(
            "time step {} s outside (0, 0.1]",
            opts.dt
        )));
    }
    let ceiling = airframe::service_ceiling(cfg, &AtmosphereModel::isa())?;
    let violations = mission::validate(plan, ceiling);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Simulation(format!(
            "mission rejected: {}",
            list.join("; ")
        )));
    }
    let vmax = airframe::max_progressive_speed(cfg)?;

    let mut run = Runner {
        cfg,
        env,
        opts: *opts,
        state: SimState::on_ground(cfg),
        target: 0.0,
        samples: Vec::new(),
        steps: 0,
        exhausted_at: None,
    };
    run.record();

    let mut completed = true;
    for cmd in &plan.commands {
        let ok = match cmd.kind {
            CommandKind::Takeoff => run.fly_to(cmd.alt),
            CommandKind::Waypoint => run.fly_to(cmd.alt) && run.hold(cmd.p1.max(0.0)),
            CommandKind::Delay => run.hold(cmd.p1),
            CommandKind::ConditionYaw => {
                run.state.heading = cmd.p1;
                true
            }
            CommandKind::DoDigicamControl => {
                let s = &mut run.state;
                s.camera_events.push(CameraEvent {
                    t: s.t,
                    altitude: s.altitude,
                    heading: s.heading,
                });
                true
            }
            CommandKind::Land => run.land(),
        };
        if !ok {
            completed = false;
            break;
        }
    }
    if !completed && run.exhausted_at.is_none() {
        return Err(Error::Simulation(format!(
            "mission did not finish within {} s",
            opts.max_time
        )));
    }
    if run.samples.last().map(|s| s.t) != Some(run.state.t) {
        run.record();
    }

    let duration = run.state.t;
    Ok(Trajectory {
        samples: run.samples,
        camera_events: run.state.camera_events,
        landing_offset: airframe::wind_drift(env.wind, vmax, duration),
        max_progressive_speed: vmax,
        battery_remaining: run.state.battery_remaining,
        battery_exhausted_at: run.exhausted_at,
    })
}
