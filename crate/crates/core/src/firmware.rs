//! Emulation of the on-board weather-station logger.
//!
//! The logger program has three phases. On the ground it beeps and logs six
//! rows to `ground.csv`, three seconds apart. In the air it appends a row to
//! `air.csv` each time the linear altimeter passes the next 5 m mark. Once
//! the mark passes 35 m it brings up the file server and sounds a long beep.
//! [`Firmware::tick`] runs one pass of the main loop and reports how long
//! the pass kept the processor busy. [`emulate_flight`] drives the loop
//! along a simulated trajectory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::atmosphere::{self, StationCalibration};
use crate::error::{Error, Result};
use crate::flightsim::{true_sample, Environment, RawReading, Trajectory};
use crate::wxindices;

pub const GROUND_FILE: &str = "ground.csv";
pub const AIR_FILE: &str = "air.csv";
pub const PHOTOS_FILE: &str = "photos.json";

/// Serial message the logger prints when a file cannot be opened for writing.
pub const WRITE_FAILURE_MESSAGE: &str = "Αποτυχία εγγραφής";

fn default_rtc_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 6, 1)
        .and_then(|d| d.and_hms_opt(10, 0, 0))
        .expect("valid date")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FirmwareConfig {
    /// Station elevation used to reduce pressure to sea level, m.
    pub elevation: f64,
    pub pressure_correction: f64,
    /// hPa per metre assumed by the linear altimeter.
    pub linear_altimeter_slope: f64,
    /// m
    pub interval_step: f64,
    /// m
    pub interval_start: f64,
    /// The server starts once the next logging mark exceeds this, m.
    pub server_threshold: f64,
    pub ground_samples: u32,
    pub ground_delay_ms: u64,
    pub air_delay_ms: u64,
    pub ground_buzzer_ms: u64,
    pub server_buzzer_ms: u64,
    /// Pause in `setup()` before the sensors are initialised.
    pub setup_delay_ms: u64,
    /// Duration of a main-loop pass that neither logs nor beeps.
    pub idle_loop_ms: u64,
    pub rtc_start: NaiveDateTime,
}

impl Default for FirmwareConfig {
    fn default() -> Self {
        Self {
            elevation: 45.0,
            pressure_correction: 0.995,
            linear_altimeter_slope: 0.12,
            interval_step: 5.0,
            interval_start: 5.0,
            server_threshold: 35.0,
            ground_samples: 6,
            ground_delay_ms: 3000,
            air_delay_ms: 3000,
            ground_buzzer_ms: 500,
            server_buzzer_ms: 5000,
            setup_delay_ms: 2000,
            idle_loop_ms: 100,
            rtc_start: default_rtc_start(),
        }
    }
}

impl FirmwareConfig {
    pub fn calibration(&self) -> StationCalibration {
        StationCalibration {
            elevation: self.elevation,
            pressure_correction: self.pressure_correction,
            linear_altimeter_slope: self.linear_altimeter_slope,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.calibration().validate()?;
        for (name, v) in [
            ("interval_step", self.interval_step),
            ("interval_start", self.interval_start),
            ("server_threshold", self.server_threshold),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "firmware.{name} must be positive, got {v}"
                )));
            }
        }
        if self.ground_samples == 0 {
            return Err(Error::Config(
                "firmware.ground_samples must be positive".into(),
            ));
        }
        if self.idle_loop_ms == 0 {
            return Err(Error::Config(
                "firmware.idle_loop_ms must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One logged observation, as written to `ground.csv` / `air.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub timestamp: NaiveDateTime,
    /// °C
    pub temperature: f64,
    /// %
    pub humidity: f64,
    /// °C
    pub heat_index: f64,
    /// Corrected station pressure, hPa.
    pub pressure: f64,
    /// Linear-altimeter height, m.
    pub cal_altitude: f64,
}

/// Renders `value` with exactly `digits` decimals, rounding half away from zero.
///
/// Rounding works on the shortest decimal representation of the value, so
/// `25.35` becomes `25.4` even though its binary form sits just below the tie.
pub fn format_fixed(value: f64, digits: usize) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return "inf".into();
    }
    let repr = format!("{}", value.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut all: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).collect();
    let keep = int_part.len() + digits;
    let round_up = all.get(keep).is_some_and(|&d| d >= b'5');
    all.resize(keep, b'0');
    if round_up {
        let mut i = keep;
        loop {
            if i == 0 {
                all.insert(0, b'1');
                break;
            }
            i -= 1;
            if all[i] == b'9' {
                all[i] = b'0';
            } else {
                all[i] += 1;
                break;
            }
        }
    }
    let int_len = all.len() - digits;
    let mut out = String::with_capacity(all.len() + 2);
    if value < 0.0 && all.iter().any(|&d| d != b'0') {
        out.push('-');
    }
    out.push_str(std::str::from_utf8(&all[..int_len]).expect("ascii"));
    if digits > 0 {
        out.push('.');
        out.push_str(std::str::from_utf8(&all[int_len..]).expect("ascii"));
    }
    out
}

/// `DD.MM.YYYY`
pub fn date_str(ts: &NaiveDateTime) -> String {
    ts.format("%d.%m.%Y").to_string()
}

/// `HH:MM:SS`
pub fn time_str(ts: &NaiveDateTime) -> String {
    ts.format("%H:%M:%S").to_string()
}

/// One CSV row exactly as the logger's print sequence writes it: seven
/// comma-terminated fields, then CRLF.
pub fn format_row(s: &SensorSample) -> Vec<u8> {
    format!(
        "{},{},{},{},{},{},{},\r\n",
        date_str(&s.timestamp),
        time_str(&s.timestamp),
        format_fixed(s.temperature, 1),
        format_fixed(s.humidity, 1),
        format_fixed(s.heat_index, 1),
        format_fixed(s.pressure, 2),
        format_fixed(s.cal_altitude, 2),
    )
    .into_bytes()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SdError {
    WriteFailed(String),
}

impl fmt::Display for SdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdError::WriteFailed(name) => write!(f, "cannot write {name}"),
        }
    }
}

/// The logger's storage card: named byte files.
///
/// An image opened on a directory writes every change through to disk, so
/// deletions made while serving are visible on the host.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdCardImage {
    files: BTreeMap<String, Vec<u8>>,
    root: Option<PathBuf>,
    write_protected: bool,
}

impl SdCardImage {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every regular file in `dir` and keeps the directory as backing store.
    pub fn open_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                let name = entry.file_name().to_string_lossy().into_owned();
                files.insert(name, fs::read(entry.path())?);
            }
        }
        Ok(Self {
            files,
            root: Some(dir.to_path_buf()),
            write_protected: false,
        })
    }

    /// Writes all files into `dir`.
    pub fn save_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }

    /// Makes every subsequent append fail, like a missing or locked card.
    pub fn set_write_protected(&mut self, on: bool) {
        self.write_protected = on;
    }

    pub fn read(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.files.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Appends to `name`, creating it if needed.
    pub fn append(&mut self, name: &str, bytes: &[u8]) -> std::result::Result<(), SdError> {
        if self.write_protected {
            return Err(SdError::WriteFailed(name.to_string()));
        }
        if let Some(root) = &self.root {
            use io::Write;
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(root.join(name))
                .map_err(|_| SdError::WriteFailed(name.to_string()))?;
            f.write_all(bytes)
                .map_err(|_| SdError::WriteFailed(name.to_string()))?;
        }
        self.files
            .entry(name.to_string())
            .or_default()
            .extend_from_slice(bytes);
        Ok(())
    }

    /// Replaces the whole content of `name`.
    pub fn put(&mut self, name: &str, bytes: Vec<u8>) -> std::result::Result<(), SdError> {
        if self.write_protected {
            return Err(SdError::WriteFailed(name.to_string()));
        }
        if let Some(root) = &self.root {
            fs::write(root.join(name), &bytes)
                .map_err(|_| SdError::WriteFailed(name.to_string()))?;
        }
        self.files.insert(name.to_string(), bytes);
        Ok(())
    }

    /// Deletes `name`. Returns whether it existed.
    pub fn remove(&mut self, name: &str) -> bool {
        if let Some(root) = &self.root {
            let _ = fs::remove_file(root.join(name));
        }
        self.files.remove(name).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Ground,
    Air,
    Serving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuzzerEvent {
    pub at_ms: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmwareState {
    pub phase: Phase,
    /// Set once the ground rows are done.
    pub run_flag: bool,
    /// Set once the file server is up.
    pub listen_flag: bool,
    /// Next linear-altimeter mark that triggers an air row, m.
    pub interval: f64,
    /// hPa
    pub mslp: f64,
    pub ground_rows_attempted: u32,
    /// Latest linear-altimeter reading, m.
    pub cal_altitude: f64,
    pub buzzer_events: Vec<BuzzerEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Buzzer(BuzzerEvent),
    RowWritten {
        file: &'static str,
        row: SensorSample,
    },
    WriteFailed {
        file: &'static str,
        message: &'static str,
    },
    ServerStarted {
        at_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutcome {
    pub effects: Vec<Effect>,
    /// Time the pass kept the loop busy, ms.
    pub busy_ms: u64,
}

/// Emulated logger: configuration plus loop state.
#[derive(Debug, Clone)]
pub struct Firmware {
    cfg: FirmwareConfig,
    state: FirmwareState,
}

/// Initial loop state: sea-level pressure from the first reading, ground phase.
pub fn setup(cfg: &FirmwareConfig, first_sample_pa: f64) -> FirmwareState {
    FirmwareState {
        phase: Phase::Ground,
        run_flag: false,
        listen_flag: false,
        interval: cfg.interval_start,
        mslp: atmosphere::mslp_from_station(first_sample_pa, &cfg.calibration()),
        ground_rows_attempted: 0,
        cal_altitude: 0.0,
        buzzer_events: Vec::new(),
    }
}

impl Firmware {
    pub fn setup(cfg: FirmwareConfig, first_sample_pa: f64) -> Self {
        let state = setup(&cfg, first_sample_pa);
        Self { cfg, state }
    }

    pub fn config(&self) -> &FirmwareConfig {
        &self.cfg
    }

    pub fn state(&self) -> &FirmwareState {
        &self.state
    }

    /// Delay between the start of the next pass and its sensor read, ms.
    /// Ground passes beep before they read.
    pub fn read_offset_ms(&self) -> u64 {
        match self.state.phase {
            Phase::Ground => self.cfg.ground_buzzer_ms,
            _ => 0,
        }
    }

    pub fn rtc(&self, clock_ms: u64) -> NaiveDateTime {
        self.cfg.rtc_start + Duration::seconds((clock_ms / 1000) as i64)
    }

    /// Turns a raw reading into the logged quantities.
    pub fn process(&self, raw: &RawReading, clock_ms: u64) -> SensorSample {
        let cal = self.cfg.calibration();
        let pressure = raw.pressure * cal.pressure_correction / 100.0;
        SensorSample {
            timestamp: self.rtc(clock_ms),
            temperature: raw.temperature,
            humidity: raw.humidity,
            heat_index: wxindices::heat_index(raw.temperature, raw.humidity),
            pressure,
            cal_altitude: atmosphere::linear_altitude(pressure, self.state.mslp, &cal),
        }
    }

    fn log(
        &mut self,
        file: &'static str,
        row: SensorSample,
        sd: &mut SdCardImage,
        effects: &mut Vec<Effect>,
    ) {
        match sd.append(file, &format_row(&row)) {
            Ok(()) => effects.push(Effect::RowWritten { file, row }),
            Err(_) => {
                log::warn!("{WRITE_FAILURE_MESSAGE} ({file})");
                effects.push(Effect::WriteFailed {
                    file,
                    message: WRITE_FAILURE_MESSAGE,
                });
            }
        }
    }

    fn buzz(&mut self, at_ms: u64, duration_ms: u64, effects: &mut Vec<Effect>) {
        let ev = BuzzerEvent { at_ms, duration_ms };
        self.state.buzzer_events.push(ev);
        effects.push(Effect::Buzzer(ev));
    }

    /// Runs one pass of the main loop starting at `clock_ms`.
    ///
    /// `raw` is the sensor reading taken `read_offset_ms()` into the pass.
    /// On the ground one pass is one iteration of the six-row loop. In the
    /// air a pass logs when the altimeter exceeds the current mark, and the
    /// server starts on the first pass after the mark passes the threshold.
    /// A failed write is reported as an effect; the loop carries on as the
    /// logger does.
    pub fn tick(&mut self, raw: &RawReading, clock_ms: u64, sd: &mut SdCardImage) -> TickOutcome {
        let mut effects = Vec::new();
        let mut busy = 0;
        match self.state.phase {
            Phase::Ground => {
                self.buzz(clock_ms, self.cfg.ground_buzzer_ms, &mut effects);
                busy += self.cfg.ground_buzzer_ms;
                let row = self.process(raw, clock_ms + busy);
                self.state.cal_altitude = row.cal_altitude;
                self.log(GROUND_FILE, row, sd, &mut effects);
                busy += self.cfg.ground_delay_ms;
                self.state.ground_rows_attempted += 1;
                if self.state.ground_rows_attempted >= self.cfg.ground_samples {
                    self.state.run_flag = true;
                    self.state.phase = Phase::Air;
                }
            }
            Phase::Air => {
                let row = self.process(raw, clock_ms);
                self.state.cal_altitude = row.cal_altitude;
                if row.cal_altitude > self.state.interval {
                    self.log(AIR_FILE, row, sd, &mut effects);
                    self.state.interval += self.cfg.interval_step;
                    busy += self.cfg.air_delay_ms;
                } else {
                    busy += self.cfg.idle_loop_ms;
                }
            }
            Phase::Serving => {
                busy += self.cfg.idle_loop_ms;
            }
        }
        if self.state.run_flag
            && self.state.interval > self.cfg.server_threshold
            && !self.state.listen_flag
        {
            effects.push(Effect::ServerStarted {
                at_ms: clock_ms + busy,
            });
            self.buzz(clock_ms + busy, self.cfg.server_buzzer_ms, &mut effects);
            busy += self.cfg.server_buzzer_ms;
            self.state.listen_flag = true;
            self.state.phase = Phase::Serving;
        }
        TickOutcome {
            effects,
            busy_ms: busy,
        }
    }
}

/// Record of one emulated flight.
#[derive(Debug, Clone, PartialEq)]
pub struct EmulationLog {
    pub mslp: f64,
    /// Logger clock at liftoff, ms.
    pub takeoff_ms: u64,
    pub server_started_ms: Option<u64>,
    pub buzzer_events: Vec<BuzzerEvent>,
    pub ground_rows: Vec<SensorSample>,
    pub air_rows: Vec<SensorSample>,
    pub write_failures: usize,
    pub final_phase: Phase,
}

/// Timing of the flight relative to the logger's clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmulationOptions {
    /// Wait between the last ground row and liftoff, ms.
    pub takeoff_after_ground_ms: u64,
    /// Keep the loop running this long after touchdown, ms.
    pub tail_ms: u64,
}

impl Default for EmulationOptions {
    fn default() -> Self {
        Self {
            takeoff_after_ground_ms: 5000,
            tail_ms: 10_000,
        }
    }
}

/// Runs the logger from power-on through the flight described by
/// `trajectory`, reading sensors from `env`, and writes the logs (plus the
/// camera manifest) into `sd`.
pub fn emulate_flight(
    cfg: &FirmwareConfig,
    opts: &EmulationOptions,
    trajectory: &Trajectory,
    env: &Environment,
    sd: &mut SdCardImage,
) -> Result<EmulationLog> {
    cfg.validate()?;
    let mut rng = env.rng();
    let first = true_sample(env, 0.0, &mut rng);
    let mut fw = Firmware::setup(*cfg, first.pressure);
    let mut clock = cfg.setup_delay_ms;

    let flight_ms = (trajectory.duration() * 1000.0).ceil() as u64;
    let mut takeoff_ms: Option<u64> = None;
    let mut log = EmulationLog {
        mslp: fw.state().mslp,
        takeoff_ms: 0,
        server_started_ms: None,
        buzzer_events: Vec::new(),
        ground_rows: Vec::new(),
        air_rows: Vec::new(),
        write_failures: 0,
        final_phase: Phase::Ground,
    };

    loop {
        if let Some(t0) = takeoff_ms {
            if clock > t0 + flight_ms + opts.tail_ms || fw.state().phase == Phase::Serving {
                break;
            }
        }
        let read_ms = clock + fw.read_offset_ms();
        let altitude = match takeoff_ms {
            Some(t0) if read_ms >= t0 => trajectory.altitude_at((read_ms - t0) as f64 / 1000.0),
            _ => 0.0,
        };
        let raw = true_sample(env, altitude, &mut rng);
        let outcome = fw.tick(&raw, clock, sd);
        for effect in outcome.effects {
            match effect {
                Effect::RowWritten { file, row } if file == GROUND_FILE => {
                    log.ground_rows.push(row)
                }
                Effect::RowWritten { row, .. } => log.air_rows.push(row),
                Effect::WriteFailed { .. } => log.write_failures += 1,
                Effect::ServerStarted { at_ms } => log.server_started_ms = Some(at_ms),
                Effect::Buzzer(_) => {}
            }
        }
        clock += outcome.busy_ms;
        if takeoff_ms.is_none() && fw.state().run_flag {
            takeoff_ms = Some(clock + opts.takeoff_after_ground_ms);
        }
    }

    let photos = serde_json::to_vec_pretty(&trajectory.camera_events)?;
    if sd.put(PHOTOS_FILE, photos).is_err() {
        log.write_failures += 1;
    }
    log.takeoff_ms = takeoff_ms.unwrap_or(0);
    log.buzzer_events = fw.state().buzzer_events.clone();
    log.final_phase = fw.state().phase;
    Ok(log)
}
