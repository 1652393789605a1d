//! Standard atmosphere and the barometric conversions used by the logger.
//!
//! Two families of formulas live here. The ISA troposphere (`AtmosphereModel`)
//! drives the airframe physics. The station conversions (`mslp_from_station`,
//! `pressure_to_altitude`, `linear_altitude`) use the logger firmware's own
//! constants (44330 m, 5.255, 0.12 hPa/m) so that emulated logs reproduce the
//! on-board arithmetic rather than the textbook model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Upper edge of the troposphere in the ISA model, m.
pub const TROPOPAUSE_M: f64 = 11_000.0;

/// Scale height used by the barometric altitude formula of the logger, m.
pub const HYPSO_SCALE_M: f64 = 44_330.0;

/// Exponent used by the barometric altitude formula of the logger.
pub const HYPSO_EXPONENT: f64 = 5.255;

/// ISA troposphere with a constant temperature lapse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereModel {
    /// Pa
    pub sea_level_pressure: f64,
    /// K
    pub sea_level_temperature: f64,
    /// K/m, positive when temperature falls with height.
    pub lapse_rate: f64,
    /// J/(kg·K)
    pub gas_constant: f64,
    /// m
    pub hypso_scale: f64,
    pub hypso_exponent: f64,
}

impl Default for AtmosphereModel {
    fn default() -> Self {
        Self::isa()
    }
}

impl AtmosphereModel {
    pub const fn isa() -> Self {
        Self {
            sea_level_pressure: 101_325.0,
            sea_level_temperature: 288.15,
            lapse_rate: 0.0065,
            gas_constant: 287.053,
            hypso_scale: HYPSO_SCALE_M,
            hypso_exponent: HYPSO_EXPONENT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sea_level_pressure > 0.0) {
            return Err(Error::Config("sea_level_pressure must be positive".into()));
        }
        if !(self.sea_level_temperature > 0.0) {
            return Err(Error::Config(
                "sea_level_temperature must be positive".into(),
            ));
        }
        if !(self.lapse_rate > 0.0) {
            return Err(Error::Config("lapse_rate must be positive".into()));
        }
        if !(self.gas_constant > 0.0) {
            return Err(Error::Config("gas_constant must be positive".into()));
        }
        if !(self.hypso_exponent > 1.0) {
            return Err(Error::Config("hypso_exponent must exceed 1".into()));
        }
        Ok(())
    }

    fn check_altitude(h: f64) -> Result<()> {
        if (0.0..=TROPOPAUSE_M).contains(&h) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "altitude {h} m outside the troposphere [0, {TROPOPAUSE_M}] m"
            )))
        }
    }

    /// Air temperature at geometric altitude `h`, K.
    pub fn temperature(&self, h: f64) -> Result<f64> {
        Self::check_altitude(h)?;
        Ok(self.sea_level_temperature - self.lapse_rate * h)
    }

    /// Static pressure at altitude `h`, Pa.
    pub fn pressure(&self, h: f64) -> Result<f64> {
        let t = self.temperature(h)?;
        let exponent = STANDARD_GRAVITY / (self.gas_constant * self.lapse_rate);
        Ok(self.sea_level_pressure * (t / self.sea_level_temperature).powf(exponent))
    }

    /// Air density at altitude `h` from the ideal-gas law, kg/m³.
    pub fn density(&self, h: f64) -> Result<f64> {
        let t = self.temperature(h)?;
        let p = self.pressure(h)?;
        Ok(p / (self.gas_constant * t))
    }

    pub fn sea_level_density(&self) -> f64 {
        self.sea_level_pressure / (self.gas_constant * self.sea_level_temperature)
    }

    /// `density(h) / density(0)`.
    pub fn density_ratio(&self, h: f64) -> Result<f64> {
        Ok(self.density(h)? / self.sea_level_density())
    }
}

pub fn isa_density(h: f64) -> Result<f64> {
    AtmosphereModel::isa().density(h)
}

pub fn isa_pressure(h: f64) -> Result<f64> {
    AtmosphereModel::isa().pressure(h)
}

pub fn isa_temperature(h: f64) -> Result<f64> {
    AtmosphereModel::isa().temperature(h)
}

/// Site constants the logger uses to reduce and convert its pressure readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationCalibration {
    /// Station elevation above mean sea level, m.
    pub elevation: f64,
    /// Multiplicative correction applied to every raw sensor reading.
    pub pressure_correction: f64,
    /// Pressure drop per metre assumed by the linear altimeter, hPa/m.
    pub linear_altimeter_slope: f64,
}

impl Default for StationCalibration {
    fn default() -> Self {
        Self {
            elevation: 45.0,
            pressure_correction: 0.995,
            linear_altimeter_slope: 0.12,
        }
    }
}

impl StationCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.pressure_correction > 0.9 && self.pressure_correction <= 1.1) {
            return Err(Error::Config(format!(
                "pressure_correction {} outside (0.9, 1.1]",
                self.pressure_correction
            )));
        }
        if !(self.linear_altimeter_slope > 0.0) {
            return Err(Error::Config(
                "linear_altimeter_slope must be positive".into(),
            ));
        }
        if !(self.elevation < HYPSO_SCALE_M) || !self.elevation.is_finite() {
            return Err(Error::Config(format!(
                "elevation {} must be finite and below {HYPSO_SCALE_M} m",
                self.elevation
            )));
        }
        Ok(())
    }
}

/// Reduces a raw station reading (Pa) to mean sea level pressure (hPa).
pub fn mslp_from_station(p_raw: f64, cal: &StationCalibration) -> f64 {
    let corrected = p_raw * cal.pressure_correction;
    let reduction = (1.0 - cal.elevation / HYPSO_SCALE_M).powf(HYPSO_EXPONENT);
    corrected / reduction / 100.0
}

/// Barometric altitude of pressure `p` (Pa) relative to a reference `mslp` (hPa).
pub fn pressure_to_altitude(p: f64, mslp: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!(
            "pressure must be positive, got {p} Pa"
        )));
    }
    if !(mslp > 0.0) {
        return Err(Error::domain(format!(
            "reference pressure must be positive, got {mslp} hPa"
        )));
    }
    let reference = mslp * 100.0;
    if p > reference * 1.01 {
        return Err(Error::domain(format!(
            "pressure {p} Pa exceeds reference {reference} Pa by more than 1%"
        )));
    }
    Ok(HYPSO_SCALE_M * (1.0 - (p / reference).powf(1.0 / HYPSO_EXPONENT)))
}

/// The logger's linear altimeter: pressure differential divided by a fixed slope.
/// Negative when `p` exceeds the reference.
pub fn linear_altitude(p: f64, mslp: f64, cal: &StationCalibration) -> f64 {
    (mslp - p) / cal.linear_altimeter_slope
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sea_level_density() {
        let rho = isa_density(0.0).unwrap();
        assert!((rho - 1.225).abs() < 1e-4, "{rho}");
        let m = AtmosphereModel::isa();
        assert_eq!(
            rho,
            m.sea_level_pressure / (m.gas_constant * m.sea_level_temperature)
        );
    }

    #[test]
    fn density_at_twenty_thousand_feet() {
        let rho = isa_density(6096.0).unwrap();
        assert!((rho - 0.65269).abs() < 5e-5, "{rho}");
        assert!(rel(rho, 0.660) < 0.02);
    }

    #[test]
    fn density_at_2000m_matches_closed_form() {
        assert!((isa_density(2000.0).unwrap() - 1.0064898).abs() < 1e-6);
    }

    #[test]
    fn pressure_and_temperature_points() {
        assert_eq!(isa_pressure(0.0).unwrap(), 101_325.0);
        assert!((isa_temperature(6096.0).unwrap() - 248.526).abs() < 1e-9);
        assert!((isa_pressure(6096.0).unwrap() - 46_563.26).abs() < 0.05);
    }

    #[test]
    fn outside_troposphere_is_rejected() {
        for h in [-1.0, 11_000.5, f64::NAN] {
            assert!(matches!(isa_density(h), Err(Error::Domain(_))));
            assert!(isa_pressure(h).is_err());
            assert!(isa_temperature(h).is_err());
        }
    }

    #[test]
    fn profiles_strictly_decrease() {
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * TROPOPAUSE_M / 99.0).collect();
        for w in grid.windows(2) {
            assert!(isa_pressure(w[1]).unwrap() < isa_pressure(w[0]).unwrap());
            assert!(isa_density(w[1]).unwrap() < isa_density(w[0]).unwrap());
        }
    }

    #[test]
    fn mslp_examples() {
        let mut cal = StationCalibration {
            elevation: 0.0,
            ..Default::default()
        };
        assert_eq!(
            mslp_from_station(101_000.0, &cal),
            101_000.0 * 0.995 / 100.0
        );
        assert!((mslp_from_station(101_000.0, &cal) - 1004.95).abs() < 1e-9);

        cal.elevation = 45.0;
        assert!((mslp_from_station(101_000.0, &cal) - 1010.32789).abs() < 1e-4);

        cal.elevation = 100.0;
        cal.pressure_correction = 1.0;
        assert!((mslp_from_station(100_000.0, &cal) - 1011.93837).abs() < 1e-4);
    }

    #[test]
    fn barometric_altitude() {
        assert_eq!(pressure_to_altitude(101_325.0, 1013.25).unwrap(), 0.0);
        let h = pressure_to_altitude(95_000.0, 1013.25).unwrap();
        assert!((h - 540.4176).abs() < 1e-3, "{h}");
        assert!(pressure_to_altitude(0.0, 1013.25).is_err());
        assert!(pressure_to_altitude(-5.0, 1013.25).is_err());
        assert!(pressure_to_altitude(103_000.0, 1013.25).is_err());
    }

    #[test]
    fn barometric_altitude_tracks_isa_below_3km() {
        for h in (0..=30).map(|i| i as f64 * 100.0) {
            let back = pressure_to_altitude(isa_pressure(h).unwrap(), 1013.25).unwrap();
            assert!((back - h).abs() < 5.0, "h={h} back={back}");
        }
    }

    #[test]
    fn linear_altimeter() {
        let cal = StationCalibration::default();
        assert_eq!(linear_altitude(1013.25, 1013.25, &cal), 0.0);
        assert!((linear_altitude(1008.25, 1013.25, &cal) - 41.6667).abs() < 1e-4);
        assert!((linear_altitude(1012.65, 1013.25, &cal) - 5.0).abs() < 1e-9);
        assert!(linear_altitude(1014.0, 1013.25, &cal) < 0.0);
    }

    #[test]
    fn calibration_validation() {
        assert!(StationCalibration::default().validate().is_ok());
        let bad = StationCalibration {
            pressure_correction: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = StationCalibration {
            linear_altimeter_slope: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linear_altitude_is_affine(p in 900.0f64..1050.0, mslp in 950.0f64..1050.0, d in -20.0f64..20.0) {
                let cal = StationCalibration::default();
                let diff = linear_altitude(p - d, mslp, &cal) - linear_altitude(p, mslp, &cal);
                prop_assert!((diff - d / 0.12).abs() < 1e-9);
            }

            #[test]
            fn altitude_zero_only_at_reference(mslp in 950.0f64..1050.0, off in 1e-6f64..0.01) {
                prop_assert!(pressure_to_altitude(mslp * 100.0, mslp).unwrap().abs() < 1e-9);
                let h = pressure_to_altitude(mslp * 100.0 * (1.0 - off), mslp).unwrap();
                prop_assert!(h > 0.0);
            }

            #[test]
            fn sea_level_station_is_plain_correction(p in 80_000.0f64..110_000.0, c in 0.95f64..1.05) {
                let cal = StationCalibration { elevation: 0.0, pressure_correction: c, linear_altimeter_slope: 0.12 };
                prop_assert_eq!(mslp_from_station(p, &cal), p * c / 100.0);
            }
        }
    }
}
