//! Autopilot flight plans for a vertical photographic sounding.
//!
//! A plan is an ordered list of autopilot commands. The on-disk form is one
//! comma-separated row per command under the header
//! `command,p1,p2,p3,p4,lat,lon,alt`. An optional `HOME` row directly below
//! the header carries the launch point, the way ground-station waypoint
//! files keep home as row zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MISSION_HEADER: &str = "command,p1,p2,p3,p4,lat,lon,alt";
const HOME_TAG: &str = "HOME";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommandKind {
    Takeoff,
    Waypoint,
    ConditionYaw,
    Delay,
    DoDigicamControl,
    Land,
}

impl CommandKind {
    pub const ALL: [CommandKind; 6] = [
        CommandKind::Takeoff,
        CommandKind::Waypoint,
        CommandKind::ConditionYaw,
        CommandKind::Delay,
        CommandKind::DoDigicamControl,
        CommandKind::Land,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Takeoff => "TAKEOFF",
            CommandKind::Waypoint => "WAYPOINT",
            CommandKind::ConditionYaw => "CONDITION_YAW",
            CommandKind::Delay => "DELAY",
            CommandKind::DoDigicamControl => "DO_DIGICAM_CONTROL",
            CommandKind::Land => "LAND",
        }
    }

    /// Commands that move the aircraft to their `alt` field.
    pub fn sets_altitude(self) -> bool {
        matches!(self, CommandKind::Takeoff | CommandKind::Waypoint)
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        CommandKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// One autopilot command row.
///
/// Parameter meaning depends on the kind: `CONDITION_YAW` takes the heading
/// in `p1`, `DELAY` the wait in seconds in `p1`, `WAYPOINT` the hold time at
/// the waypoint in `p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionCommand {
    pub kind: CommandKind,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub lat: f64,
    pub lon: f64,
    /// m above ground level
    pub alt: f64,
}

impl MissionCommand {
    pub fn new(kind: CommandKind) -> Self {
        Self {
            kind,
            p1: 0.0,
            p2: 0.0,
            p3: 0.0,
            p4: 0.0,
            lat: 0.0,
            lon: 0.0,
            alt: 0.0,
        }
    }

    pub fn takeoff(home: GeoPoint, alt: f64) -> Self {
        Self {
            lat: home.lat,
            lon: home.lon,
            alt,
            ..Self::new(CommandKind::Takeoff)
        }
    }

    pub fn waypoint(home: GeoPoint, alt: f64, hold_s: f64) -> Self {
        Self {
            p1: hold_s,
            lat: home.lat,
            lon: home.lon,
            alt,
            ..Self::new(CommandKind::Waypoint)
        }
    }

    /// Absolute heading, clockwise.
    pub fn yaw(heading: f64) -> Self {
        Self {
            p1: heading,
            p3: 1.0,
            ..Self::new(CommandKind::ConditionYaw)
        }
    }

    pub fn delay(seconds: f64) -> Self {
        Self {
            p1: seconds,
            ..Self::new(CommandKind::Delay)
        }
    }

    pub fn capture(home: GeoPoint, alt: f64) -> Self {
        Self {
            lat: home.lat,
            lon: home.lon,
            alt,
            ..Self::new(CommandKind::DoDigicamControl)
        }
    }

    pub fn land(home: GeoPoint) -> Self {
        Self {
            lat: home.lat,
            lon: home.lon,
            ..Self::new(CommandKind::Land)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MissionPlan {
    pub home: GeoPoint,
    pub commands: Vec<MissionCommand>,
}

impl MissionPlan {
    /// Highest altitude any command refers to.
    pub fn max_altitude(&self) -> f64 {
        self.commands.iter().map(|c| c.alt).fold(0.0, f64::max)
    }

    pub fn capture_count(&self) -> usize {
        self.commands
            .iter()
            .filter(|c| c.kind == CommandKind::DoDigicamControl)
            .count()
    }
}

fn default_start_alt() -> f64 {
    10.0
}
fn default_step() -> f64 {
    10.0
}
fn default_headings() -> Vec<f64> {
    vec![90.0, 180.0, 270.0, 0.0]
}
fn default_dwell() -> f64 {
    3.0
}

/// Parameters of the stepped climb-and-capture pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoundingPattern {
    /// m AGL
    pub target_alt: f64,
    #[serde(default = "default_start_alt")]
    pub start_alt: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Headings photographed at every level, degrees. 360 is folded to 0.
    #[serde(default = "default_headings")]
    pub headings: Vec<f64>,
    /// Pause after each shutter release, s.
    #[serde(default = "default_dwell")]
    pub capture_dwell: f64,
    #[serde(default)]
    pub home: GeoPoint,
}

impl SoundingPattern {
    pub fn new(target_alt: f64) -> Self {
        Self {
            target_alt,
            start_alt: default_start_alt(),
            step: default_step(),
            headings: default_headings(),
            capture_dwell: default_dwell(),
            home: GeoPoint::default(),
        }
    }

    /// Capture altitudes: `start, start+step, …`, the last one clamped to the target.
    pub fn levels(&self) -> Result<Vec<f64>> {
        let finite = [
            self.target_alt,
            self.start_alt,
            self.step,
            self.capture_dwell,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.headings.iter().all(|h| h.is_finite());
        if !finite {
            return Err(Error::Config(
                "sounding pattern values must be finite".into(),
            ));
        }
        if self.start_alt < 0.0 {
            return Err(Error::Config("start altitude must be non-negative".into()));
        }
        if self.start_alt > self.target_alt {
            return Err(Error::Config(format!(
                "start altitude {} m is above the target {} m",
                self.start_alt, self.target_alt
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config("altitude step must be positive".into()));
        }
        if self.capture_dwell < 0.0 {
            return Err(Error::Config("capture dwell must be non-negative".into()));
        }
        let mut levels = vec![self.start_alt];
        for i in 1.. {
            let next = self.start_alt + i as f64 * self.step;
            if next >= self.target_alt {
                if *levels.last().unwrap() < self.target_alt {
                    levels.push(self.target_alt);
                }
                break;
            }
            levels.push(next);
        }
        Ok(levels)
    }
}

/// Builds the stepped sounding: take off to the first level, photograph
/// every heading there, climb to the next level and repeat, then descend
/// back to the first level and land.
pub fn generate_sounding_profile(pattern: &SoundingPattern) -> Result<MissionPlan> {
    let levels = pattern.levels()?;
    let home = pattern.home;
    let mut commands = vec![MissionCommand::takeoff(home, levels[0])];
    for (i, &level) in levels.iter().enumerate() {
        if i > 0 {
            commands.push(MissionCommand::waypoint(home, level, 1.0));
        }
        for &heading in &pattern.headings {
            commands.push(MissionCommand::yaw(heading.rem_euclid(360.0)));
            commands.push(MissionCommand::delay(1.0));
            commands.push(MissionCommand::capture(home, level));
            commands.push(MissionCommand::delay(pattern.capture_dwell));
        }
    }
    if levels.len() > 1 {
        commands.push(MissionCommand::waypoint(home, pattern.start_alt, 1.0));
    }
    commands.push(MissionCommand::land(home));
    Ok(MissionPlan { home, commands })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    FirstNotTakeoff(CommandKind),
    LastNotLand(CommandKind),
    MisplacedTakeoff {
        index: usize,
    },
    MisplacedLand {
        index: usize,
    },
    NonFinite {
        index: usize,
    },
    NegativeAltitude {
        index: usize,
        alt: f64,
    },
    HeadingOutOfRange {
        index: usize,
        heading: f64,
    },
    NegativeDelay {
        index: usize,
        seconds: f64,
    },
    AboveCeiling {
        index: usize,
        alt: f64,
        ceiling: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Row numbers are 1-based to match ground-station listings.
        match self {
            Violation::Empty => write!(f, "plan has no commands"),
            Violation::FirstNotTakeoff(k) => write!(f, "first command is {k}, expected TAKEOFF"),
            Violation::LastNotLand(k) => write!(f, "last command is {k}, expected LAND"),
            Violation::MisplacedTakeoff { index } => {
                write!(f, "command {}: TAKEOFF only allowed first", index + 1)
            }
            Violation::MisplacedLand { index } => {
                write!(f, "command {}: LAND only allowed last", index + 1)
            }
            Violation::NonFinite { index } => {
                write!(f, "command {}: non-finite parameter", index + 1)
            }
            Violation::NegativeAltitude { index, alt } => {
                write!(f, "command {}: negative altitude {alt} m", index + 1)
            }
            Violation::HeadingOutOfRange { index, heading } => {
                write!(
                    f,
                    "command {}: heading {heading} outside [0, 360)",
                    index + 1
                )
            }
            Violation::NegativeDelay { index, seconds } => {
                write!(f, "command {}: negative delay {seconds} s", index + 1)
            }
            Violation::AboveCeiling {
                index,
                alt,
                ceiling,
            } => write!(
                f,
                "command {}: altitude {alt} m above ceiling {ceiling:.1} m",
                index + 1
            ),
        }
    }
}

/// Checks ordering and per-command rules. An empty result means the plan is flyable.
pub fn validate(plan: &MissionPlan, ceiling: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let cmds = &plan.commands;
    let Some(first) = cmds.first() else {
        out.push(Violation::Empty);
        return out;
    };
    if first.kind != CommandKind::Takeoff {
        out.push(Violation::FirstNotTakeoff(first.kind));
    }
    let last = cmds[cmds.len() - 1];
    if last.kind != CommandKind::Land {
        out.push(Violation::LastNotLand(last.kind));
    }
    for (index, c) in cmds.iter().enumerate() {
        if c.kind == CommandKind::Takeoff && index != 0 {
            out.push(Violation::MisplacedTakeoff { index });
        }
        if c.kind == CommandKind::Land && index != cmds.len() - 1 {
            out.push(Violation::MisplacedLand { index });
        }
        let values = [c.p1, c.p2, c.p3, c.p4, c.lat, c.lon, c.alt];
        if values.iter().any(|v| !v.is_finite()) {
            out.push(Violation::NonFinite { index });
            continue;
        }
        if c.alt < 0.0 {
            out.push(Violation::NegativeAltitude { index, alt: c.alt });
        }
        if c.alt > ceiling {
            out.push(Violation::AboveCeiling {
                index,
                alt: c.alt,
                ceiling,
            });
        }
        match c.kind {
            CommandKind::ConditionYaw if !(0.0..360.0).contains(&c.p1) => {
                out.push(Violation::HeadingOutOfRange {
                    index,
                    heading: c.p1,
                });
            }
            CommandKind::Delay if c.p1 < 0.0 => {
                out.push(Violation::NegativeDelay {
                    index,
                    seconds: c.p1,
                });
            }
            _ => {}
        }
    }
    out
}

fn write_row(out: &mut String, tag: &str, v: [f64; 7]) {
    use fmt::Write;
    let _ = writeln!(
        out,
        "{tag},{},{},{},{},{},{},{}",
        v[0], v[1], v[2], v[3], v[4], v[5], v[6]
    );
}

/// Renders a plan in the mission file format.
pub fn serialize(plan: &MissionPlan) -> String {
    let mut out = String::new();
    out.push_str(MISSION_HEADER);
    out.push('\n');
    write_row(
        &mut out,
        HOME_TAG,
        [0.0, 0.0, 0.0, 0.0, plan.home.lat, plan.home.lon, 0.0],
    );
    for c in &plan.commands {
        write_row(
            &mut out,
            c.kind.as_str(),
            [c.p1, c.p2, c.p3, c.p4, c.lat, c.lon, c.alt],
        );
    }
    out
}

fn parse_number(field: &str, row: usize, column: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::parse(
            row,
            format!("column {column}: `{}` is not a number", field.trim()),
        )
    })
}

/// Parses the mission file format. Row numbers in errors are 1-based file lines.
pub fn parse(text: &str) -> Result<MissionPlan> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == MISSION_HEADER => {}
        Some((row, h)) => {
            return Err(Error::parse(
                row,
                format!("expected header `{MISSION_HEADER}`, found `{h}`"),
            ))
        }
        None => return Err(Error::parse(1, "missing header")),
    }
    const COLUMNS: [&str; 7] = ["p1", "p2", "p3", "p4", "lat", "lon", "alt"];
    let mut plan = MissionPlan::default();
    let mut first_data = true;
    for (row, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                row,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let mut v = [0.0; 7];
        for (slot, (field, column)) in v.iter_mut().zip(fields[1..].iter().zip(COLUMNS)) {
            *slot = parse_number(field, row, column)?;
        }
        let tag = fields[0].trim();
        if tag == HOME_TAG {
            if !first_data {
                return Err(Error::parse(
                    row,
                    "HOME must be the first row after the header",
                ));
            }
            plan.home = GeoPoint {
                lat: v[4],
                lon: v[5],
            };
        } else {
            let kind = tag
                .parse::<CommandKind>()
                .map_err(|e| Error::parse(row, e))?;
            plan.commands.push(MissionCommand {
                kind,
                p1: v[0],
                p2: v[1],
                p3: v[2],
                p4: v[3],
                lat: v[4],
                lon: v[5],
                alt: v[6],
            });
        }
        first_data = false;
    }
    Ok(plan)
}

/// Parses the tab-separated command table a ground-station planner
/// displays: a `Command\tP1\t…` header, then rows `N KIND\tp1\tp2\tp3\tp4\tlat\tlon\talt…`.
/// Columns past `alt` are ignored. Home is taken from a leading TAKEOFF.
pub fn parse_planner_table(text: &str) -> Result<MissionPlan> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split('\t').next().map(str::trim) == Some("Command") => {}
        Some((row, _)) => return Err(Error::parse(row, "expected a `Command` header row")),
        None => return Err(Error::parse(1, "missing header")),
    }
    const COLUMNS: [&str; 7] = ["P1", "P2", "P3", "P4", "Lat", "Lon", "Alt"];
    let mut plan = MissionPlan::default();
    for (row, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            return Err(Error::parse(
                row,
                format!("expected at least 8 columns, found {}", fields.len()),
            ));
        }
        let label = fields[0].split_whitespace().last().unwrap_or("");
        let kind = label
            .parse::<CommandKind>()
            .map_err(|e| Error::parse(row, e))?;
        let mut v = [0.0; 7];
        for (slot, (field, column)) in v.iter_mut().zip(fields[1..8].iter().zip(COLUMNS)) {
            *slot = parse_number(field, row, column)?;
        }
        plan.commands.push(MissionCommand {
            kind,
            p1: v[0],
            p2: v[1],
            p3: v[2],
            p4: v[3],
            lat: v[4],
            lon: v[5],
            alt: v[6],
        });
    }
    if let Some(first) = plan
        .commands
        .first()
        .filter(|c| c.kind == CommandKind::Takeoff)
    {
        plan.home = GeoPoint {
            lat: first.lat,
            lon: first.lon,
        };
    }
    Ok(plan)
}
