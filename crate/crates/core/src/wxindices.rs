//! Surface indices, freezing level and sounding profiles built from the
//! logger's CSV files.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firmware::SensorSample;

const MAGNUS_ALPHA: f64 = 17.62;
/// °C
const MAGNUS_BETA: f64 = 243.12;

/// Dew point by the Magnus formula, °C.
pub fn dew_point(temperature: f64, humidity: f64) -> Result<f64> {
    if !(humidity > 0.0 && humidity <= 100.0) {
        return Err(Error::domain(format!(
            "relative humidity {humidity} outside (0, 100]"
        )));
    }
    if humidity == 100.0 {
        return Ok(temperature);
    }
    let gamma = (humidity / 100.0).ln() + MAGNUS_ALPHA * temperature / (MAGNUS_BETA + temperature);
    Ok(MAGNUS_BETA * gamma / (MAGNUS_ALPHA - gamma))
}

pub fn celsius_to_fahrenheit(c: f64) -> f64 {
    c * 1.8 + 32.0
}

pub fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) * 0.55555
}

/// Heat index in °F from °F and %RH, as computed by the DHT sensor library.
pub fn heat_index_f(t: f64, rh: f64) -> f64 {
    let mut hi = 0.5 * (t + 61.0 + (t - 68.0) * 1.2 + rh * 0.094);
    if hi > 79.0 {
        hi = -42.379 + 2.04901523 * t + 10.14333127 * rh
            - 0.22475541 * t * rh
            - 0.00683783 * t.powi(2)
            - 0.05481717 * rh.powi(2)
            + 0.00122874 * t.powi(2) * rh
            + 0.00085282 * t * rh.powi(2)
            - 0.00000199 * t.powi(2) * rh.powi(2);
        if rh < 13.0 && (80.0..=112.0).contains(&t) {
            hi -= ((13.0 - rh) * 0.25) * ((17.0 - (t - 95.0).abs()) * 0.05882).sqrt();
        } else if rh > 85.0 && (80.0..=87.0).contains(&t) {
            hi += ((rh - 85.0) * 0.1) * ((87.0 - t) * 0.2);
        }
    }
    hi
}

/// Heat index in °C.
pub fn heat_index(temperature: f64, humidity: f64) -> f64 {
    fahrenheit_to_celsius(heat_index_f(celsius_to_fahrenheit(temperature), humidity))
}

/// Thom's discomfort index.
pub fn discomfort_index(temperature: f64, humidity: f64) -> f64 {
    temperature - 0.55 * (1.0 - 0.01 * humidity) * (temperature - 14.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezingStatus {
    /// 0 °C lies between two logged levels.
    Bracketed,
    /// Root of the fitted lapse line above the station.
    Extrapolated,
    /// Root of the fitted lapse line lies below the station.
    BelowSurface,
    /// Temperature does not fall with height.
    Indeterminate,
    /// Fewer than two levels.
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezingLevel {
    pub status: FreezingStatus,
    /// m above the station
    pub altitude: Option<f64>,
    /// Fitted cooling rate, °C/m (positive when temperature falls with height).
    pub lapse_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileLevel {
    /// m
    pub altitude: f64,
    /// °C
    pub temperature: f64,
    /// %
    pub humidity: f64,
    /// hPa
    pub pressure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub temperature: f64,
    pub humidity: f64,
    pub pressure: f64,
    pub rows: usize,
    pub first_time: NaiveDateTime,
    pub last_time: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundingProfile {
    pub levels: Vec<ProfileLevel>,
    pub surface: SurfaceSummary,
    /// Time of the last air row, if any.
    pub last_time: Option<NaiveDateTime>,
}

/// Least-squares line `y = a + b x`. Returns `(a, b)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

pub fn freezing_level(levels: &[ProfileLevel]) -> FreezingLevel {
    if levels.len() < 2 {
        return FreezingLevel {
            status: FreezingStatus::Unavailable,
            altitude: None,
            lapse_rate: None,
        };
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.altitude).collect();
    let ts: Vec<f64> = levels.iter().map(|l| l.temperature).collect();
    let lapse = fit_line(&hs, &ts).map(|(_, b)| -b);

    for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo.temperature == 0.0 {
            return FreezingLevel {
                status: FreezingStatus::Bracketed,
                altitude: Some(lo.altitude),
                lapse_rate: lapse,
            };
        }
        if (lo.temperature > 0.0) != (hi.temperature > 0.0) {
            let frac = lo.temperature / (lo.temperature - hi.temperature);
            return FreezingLevel {
                status: FreezingStatus::Bracketed,
                altitude: Some(lo.altitude + frac * (hi.altitude - lo.altitude)),
                lapse_rate: lapse,
            };
        }
    }

    match fit_line(&hs, &ts) {
        Some((a, b)) if -b > 0.0 => {
            let root = -a / b;
            FreezingLevel {
                status: if root < 0.0 {
                    FreezingStatus::BelowSurface
                } else {
                    FreezingStatus::Extrapolated
                },
                altitude: Some(root),
                lapse_rate: Some(-b),
            }
        }
        _ => FreezingLevel {
            status: FreezingStatus::Indeterminate,
            altitude: None,
            lapse_rate: lapse,
        },
    }
}

/// Median; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn surface_summary(ground: &[SensorSample]) -> Result<SurfaceSummary> {
    if ground.is_empty() {
        return Err(Error::Data("no ground rows to summarise".into()));
    }
    let col = |f: fn(&SensorSample) -> f64| {
        median(&ground.iter().map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN)
    };
    Ok(SurfaceSummary {
        temperature: col(|s| s.temperature),
        humidity: col(|s| s.humidity),
        pressure: col(|s| s.pressure),
        rows: ground.len(),
        first_time: ground.iter().map(|s| s.timestamp).min().expect("non-empty"),
        last_time: ground.iter().map(|s| s.timestamp).max().expect("non-empty"),
    })
}

fn parse_field(field: &str, what: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(row, format!("bad {what} {field:?}")))
}

/// Parses logger CSV text. Rows are numbered from 1 in errors.
pub fn parse_rows(text: &str) -> Result<Vec<SensorSample>> {
    let mut out = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let row = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').collect();
        if fields.last() == Some(&"") {
            fields.pop();
        }
        if fields.len() != 7 {
            return Err(Error::parse(
                row,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(fields[0].trim(), "%d.%m.%Y")
            .map_err(|_| Error::parse(row, format!("bad date {:?}", fields[0])))?;
        let time = NaiveTime::parse_from_str(fields[1].trim(), "%H:%M:%S")
            .map_err(|_| Error::parse(row, format!("bad time {:?}", fields[1])))?;
        out.push(SensorSample {
            timestamp: date.and_time(time),
            temperature: parse_field(fields[2], "temperature", row)?,
            humidity: parse_field(fields[3], "humidity", row)?,
            heat_index: parse_field(fields[4], "heat index", row)?,
            pressure: parse_field(fields[5], "pressure", row)?,
            cal_altitude: parse_field(fields[6], "altitude", row)?,
        });
    }
    Ok(out)
}

/// Builds the profile from air rows (heights from the linear altimeter)
/// and the ground rows' medians.
pub fn build_profile(air: &[SensorSample], ground: &[SensorSample]) -> Result<SoundingProfile> {
    let surface = surface_summary(ground)?;
    for (i, w) in air.windows(2).enumerate() {
        if !(w[1].cal_altitude > w[0].cal_altitude) {
            return Err(Error::Data(format!(
                "air row {} at {} m does not rise above the previous row at {} m",
                i + 2,
                w[1].cal_altitude,
                w[0].cal_altitude
            )));
        }
    }
    Ok(SoundingProfile {
        levels: air
            .iter()
            .map(|s| ProfileLevel {
                altitude: s.cal_altitude,
                temperature: s.temperature,
                humidity: s.humidity,
                pressure: s.pressure,
            })
            .collect(),
        surface,
        last_time: air.iter().map(|s| s.timestamp).max(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub altitude: f64,
    pub temperature: f64,
    pub humidity: f64,
    pub pressure: f64,
    pub dew_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WxReport {
    /// Start of the ground log.
    pub collection_time: NaiveDateTime,
    /// Last logged row, ground or air.
    pub collection_end: NaiveDateTime,
    pub surface_temperature: f64,
    pub surface_humidity: f64,
    /// hPa
    pub surface_pressure: f64,
    pub dew_point: Option<f64>,
    pub heat_index: f64,
    pub discomfort_index: f64,
    pub freezing_level: FreezingLevel,
    pub fitted_lapse_rate: Option<f64>,
    pub ground_rows: usize,
    pub levels: Vec<LevelReport>,
}

pub fn build_report(profile: &SoundingProfile) -> WxReport {
    let s = &profile.surface;
    let fl = freezing_level(&profile.levels);
    WxReport {
        collection_time: s.first_time,
        collection_end: profile
            .last_time
            .map_or(s.last_time, |t| t.max(s.last_time)),
        surface_temperature: s.temperature,
        surface_humidity: s.humidity,
        surface_pressure: s.pressure,
        dew_point: dew_point(s.temperature, s.humidity).ok(),
        heat_index: heat_index(s.temperature, s.humidity),
        discomfort_index: discomfort_index(s.temperature, s.humidity),
        freezing_level: fl,
        fitted_lapse_rate: fl.lapse_rate,
        ground_rows: s.rows,
        levels: profile
            .levels
            .iter()
            .map(|l| LevelReport {
                altitude: l.altitude,
                temperature: l.temperature,
                humidity: l.humidity,
                pressure: l.pressure,
                dew_point: dew_point(l.temperature, l.humidity).ok(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firmware::format_row;

    fn level(altitude: f64, temperature: f64) -> ProfileLevel {
        ProfileLevel {
            altitude,
            temperature,
            humidity: 50.0,
            pressure: 1000.0,
        }
    }

    fn row(t: f64, rh: f64, p: f64, alt: f64, sec: u32) -> SensorSample {
        SensorSample {
            timestamp: NaiveDate::from_ymd_opt(2021, 6, 1)
                .unwrap()
                .and_hms_opt(10, 0, sec)
                .unwrap(),
            temperature: t,
            humidity: rh,
            heat_index: heat_index(t, rh),
            pressure: p,
            cal_altitude: alt,
        }
    }

    #[test]
    fn dew_point_values() {
        assert_eq!(dew_point(17.3, 100.0).unwrap(), 17.3);
        assert!((dew_point(20.0, 50.0).unwrap() - 9.25517).abs() < 1e-4);
        assert!(dew_point(20.0, 0.0).is_err());
    }

    #[test]
    fn heat_index_branches() {
        assert!((heat_index_f(77.0, 40.0) - 76.28).abs() < 1e-9);
        assert!((heat_index(25.0, 40.0) - 24.6).abs() < 0.01);
        assert!((heat_index_f(86.0, 70.0) - 95.0684).abs() < 1e-3);
        assert!((heat_index(10.0, 50.0) - 8.3611).abs() < 1e-3);
    }

    #[test]
    fn discomfort_values() {
        assert!((discomfort_index(30.0, 60.0) - 26.59).abs() < 1e-9);
        assert_eq!(discomfort_index(14.5, 33.0), 14.5);
        assert_eq!(discomfort_index(27.0, 100.0), 27.0);
    }

    #[test]
    fn freezing_level_cases() {
        let fl = freezing_level(&[level(0.0, 2.0), level(100.0, -2.0)]);
        assert_eq!(fl.status, FreezingStatus::Bracketed);
        assert!((fl.altitude.unwrap() - 50.0).abs() < 1e-12);

        let linear: Vec<_> = (1..=7)
            .map(|i| level(5.0 * i as f64, 15.0 - 0.0065 * 5.0 * i as f64))
            .collect();
        let fl = freezing_level(&linear);
        assert_eq!(fl.status, FreezingStatus::Extrapolated);
        assert!((fl.altitude.unwrap() - 2307.6923).abs() < 1e-3);

        let iso = [level(5.0, 10.0), level(10.0, 10.0)];
        assert_eq!(freezing_level(&iso).status, FreezingStatus::Indeterminate);

        let cold = [level(5.0, -1.0), level(10.0, -1.5)];
        let fl = freezing_level(&cold);
        assert_eq!(fl.status, FreezingStatus::BelowSurface);
        assert!(fl.altitude.unwrap() < 0.0);

        assert_eq!(
            freezing_level(&[level(5.0, 3.0)]).status,
            FreezingStatus::Unavailable
        );
    }

    #[test]
    fn medians() {
        assert_eq!(
            median(&[20.1, 20.2, 20.2, 20.3, 20.4, 20.5]).unwrap(),
            20.25
        );
        assert_eq!(median(&[3.0]).unwrap(), 3.0);
        assert!(surface_summary(&[]).is_err());
    }

    #[test]
    fn parse_reports_row_number() {
        let good = String::from_utf8(format_row(&row(20.0, 50.0, 1000.0, 5.0, 1))).unwrap();
        let text = format!("{good}{good}01.06.2021,10:00:01,abc,1,1,1,1,\r\n");
        match parse_rows(&text) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_rows("").unwrap().is_empty());
    }

    #[test]
    fn shuffled_air_rows_rejected() {
        let ground = [row(20.0, 50.0, 1000.0, 0.0, 0)];
        let air = [
            row(20.0, 50.0, 999.0, 10.0, 5),
            row(20.0, 50.0, 999.5, 5.0, 8),
        ];
        assert!(matches!(build_profile(&air, &ground), Err(Error::Data(_))));
    }

    #[test]
    fn surface_only_report() {
        let ground = [
            row(20.0, 50.0, 1000.0, 0.0, 0),
            row(20.2, 52.0, 1000.2, 0.0, 3),
        ];
        let report = build_report(&build_profile(&[], &ground).unwrap());
        assert_eq!(report.freezing_level.status, FreezingStatus::Unavailable);
        assert!(report.levels.is_empty());
        assert!((report.surface_temperature - 20.1).abs() < 1e-12);
        assert!(report.dew_point.unwrap() <= report.surface_temperature);
    }

    /// Size of the jump at the 79 °F switch between the simple formula and the regression.
    fn branch_jump(rh: f64) -> (f64, f64) {
        // the simple formula reaches 79 °F at this temperature
        let t = (89.3 - 0.047 * rh) / 1.1;
        let simple = 0.5 * (t + 61.0 + (t - 68.0) * 1.2 + rh * 0.094);
        let above = heat_index_f(t + 1e-9, rh);
        (t, (above - simple).abs())
    }

    #[test]
    fn heat_index_branch_boundary() {
        let worst = (0..=100)
            .map(|rh| branch_jump(rh as f64).1)
            .fold(0.0, f64::max);
        if worst <= 1.5 {
            return;
        }
        // larger jump than tolerated: check that the switch sits exactly at 79 °F
        for rh in (0..=100).step_by(5) {
            let (t, _) = branch_jump(rh as f64);
            let below = heat_index_f(t - 1e-6, rh as f64);
            assert!(below <= 79.0 + 1e-6);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dew_point_below_temperature(t in -10.0f64..40.0, rh in 5.0f64..99.99) {
                prop_assert!(dew_point(t, rh).unwrap() < t);
            }

            #[test]
            fn dew_point_rises_with_humidity(t in -10.0f64..40.0, rh in 5.0f64..99.0, d in 0.01f64..1.0) {
                prop_assert!(dew_point(t, rh + d).unwrap() > dew_point(t, rh).unwrap());
            }

            #[test]
            fn discomfort_pivot(rh in 0.0f64..=100.0) {
                prop_assert!((discomfort_index(14.5, rh) - 14.5).abs() < 1e-12);
            }

            #[test]
            fn linear_profile_root(t0 in -5.0f64..35.0, lapse in 0.001f64..0.02, n in 2usize..12) {
                let levels: Vec<_> = (1..=n).map(|i| {
                    let h = 5.0 * i as f64;
                    level(h, t0 - lapse * h)
                }).collect();
                let fl = freezing_level(&levels);
                prop_assert!((fl.altitude.unwrap() - t0 / lapse).abs() < 1e-6);
            }

            #[test]
            fn median_permutation_invariant(mut v in proptest::collection::vec(-50.0f64..50.0, 1..20), seed in any::<u64>()) {
                let m = median(&v).unwrap();
                let k = (seed as usize) % v.len();
                v.rotate_left(k);
                v.reverse();
                prop_assert_eq!(median(&v).unwrap(), m);
            }

            #[test]
            fn csv_round_trip(t in -30.0f64..45.0, rh in 1.0f64..100.0, p in 300.0f64..1100.0, a in 0.0f64..100.0) {
                let r = row(t, rh, p, a, 7);
                let parsed = parse_rows(std::str::from_utf8(&format_row(&r)).unwrap()).unwrap();
                let back = parsed[0];
                prop_assert!((back.temperature - t).abs() <= 0.05 + 1e-9);
                prop_assert!((back.humidity - rh).abs() <= 0.05 + 1e-9);
                prop_assert!((back.pressure - p).abs() <= 0.005 + 1e-9);
                prop_assert!((back.cal_altitude - a).abs() <= 0.005 + 1e-9);
                prop_assert_eq!(back.timestamp, r.timestamp);
            }
        }
    }
}
