//! Airframe performance arithmetic: thrust-to-weight, propeller thrust,
//! altitude scaling of thrust, service ceiling, wind limits and drift,
//! battery load and endurance, and reliability.
//!
//! Thrust is carried in gram-force throughout, as hobby motor datasheets
//! quote it. Newtons appear only in the propeller formula and in the
//! flight simulator.

use serde::{Deserialize, Serialize};

use crate::atmosphere::{AtmosphereModel, STANDARD_GRAVITY, TROPOPAUSE_M};
use crate::error::{Error, Result};

const INCH_M: f64 = 0.0254;
const SEA_LEVEL_RHO: f64 = 1.225;

/// Lower bound of each Beaufort band, km/h, indexed by force number.
pub const BEAUFORT_KMH: [f64; 13] = [
    0.0, 1.0, 6.0, 12.0, 20.0, 29.0, 39.0, 50.0, 62.0, 75.0, 89.0, 103.0, 118.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSpec {
    /// Stator size as the usual four-digit `XXYY` code: diameter then height, mm.
    pub size_code: u16,
    /// Unloaded rpm per volt.
    pub kv: f64,
    /// Maximum static thrust of one motor with its propeller at sea level, gram-force.
    pub max_thrust_per_motor: f64,
    /// V
    pub operating_voltage: f64,
}

impl MotorSpec {
    pub fn stator_diameter_mm(&self) -> u16 {
        self.size_code / 100
    }

    pub fn stator_height_mm(&self) -> u16 {
        self.size_code % 100
    }

    /// Unloaded speed at the operating voltage.
    pub fn no_load_rpm(&self) -> f64 {
        self.kv * self.operating_voltage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropSpec {
    /// in
    pub diameter: f64,
    /// in
    pub pitch: f64,
    pub max_rpm: f64,
}

impl PropSpec {
    /// Axial speed the blade would advance per second with no slip, m/s.
    pub fn pitch_speed(&self, rpm: f64) -> f64 {
        rpm * INCH_M * self.pitch / 60.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    /// mAh
    pub capacity: f64,
    pub c_rate: f64,
    /// V per cell
    pub nominal_voltage: f64,
    pub cells: u32,
}

impl BatterySpec {
    pub fn capacity_ah(&self) -> f64 {
        self.capacity / 1000.0
    }

    pub fn pack_voltage(&self) -> f64 {
        self.nominal_voltage * self.cells as f64
    }
}

fn default_hover_current() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirframeConfig {
    pub motors: MotorSpec,
    pub n_motors: u32,
    pub prop: PropSpec,
    pub battery: BatterySpec,
    /// g
    pub total_mass: f64,
    /// Vertical drag force per squared climb speed, N·s²/m².
    pub frame_drag_coefficient: f64,
    /// Drag area (Cd·A) presented in forward flight, m².
    pub body_drag_area: f64,
    pub mtbf_hours: f64,
    /// Pack current while hovering at sea level, A.
    #[serde(default = "default_hover_current")]
    pub hover_current: f64,
}

impl Default for AirframeConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl AirframeConfig {
    /// 2 kg quad that hovers at half throttle, on a 4S 5000 mAh 50C pack.
    ///
    /// The vertical drag coefficient is tuned so the full-throttle terminal
    /// climb at sea level is 120 ft/s.
    pub fn reference() -> Self {
        Self {
            motors: MotorSpec {
                size_code: 2216,
                kv: 1000.0,
                max_thrust_per_motor: 1000.0,
                operating_voltage: 14.8,
            },
            n_motors: 4,
            prop: PropSpec {
                diameter: 7.0,
                pitch: 8.0,
                max_rpm: 14_336.0,
            },
            battery: BatterySpec {
                capacity: 5000.0,
                c_rate: 50.0,
                nominal_voltage: 3.7,
                cells: 4,
            },
            total_mass: 2000.0,
            frame_drag_coefficient: 0.01466,
            body_drag_area: 0.02,
            mtbf_hours: 160.0,
            hover_current: default_hover_current(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("motors.kv", self.motors.kv),
            (
                "motors.max_thrust_per_motor",
                self.motors.max_thrust_per_motor,
            ),
            ("motors.operating_voltage", self.motors.operating_voltage),
            ("prop.diameter", self.prop.diameter),
            ("prop.pitch", self.prop.pitch),
            ("prop.max_rpm", self.prop.max_rpm),
            ("battery.capacity", self.battery.capacity),
            ("battery.c_rate", self.battery.c_rate),
            ("battery.nominal_voltage", self.battery.nominal_voltage),
            ("total_mass", self.total_mass),
            ("mtbf_hours", self.mtbf_hours),
            ("hover_current", self.hover_current),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "airframe.{name} must be positive, got {v}"
                )));
            }
        }
        if self.n_motors == 0 {
            return Err(Error::Config("airframe.n_motors must be at least 1".into()));
        }
        if self.battery.cells == 0 {
            return Err(Error::Config(
                "airframe.battery.cells must be at least 1".into(),
            ));
        }
        if self.motors.size_code > 9999 {
            return Err(Error::Config(format!(
                "airframe.motors.size_code {} is not a four-digit XXYY code",
                self.motors.size_code
            )));
        }
        for (name, v) in [
            ("frame_drag_coefficient", self.frame_drag_coefficient),
            ("body_drag_area", self.body_drag_area),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "airframe.{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// kg
    pub fn mass_kg(&self) -> f64 {
        self.total_mass / 1000.0
    }

    /// N
    pub fn weight_newtons(&self) -> f64 {
        self.mass_kg() * STANDARD_GRAVITY
    }

    /// Combined sea-level static thrust of all motors, N.
    pub fn max_thrust_newtons(&self) -> f64 {
        grams_to_newtons(self.motors.max_thrust_per_motor * self.n_motors as f64)
    }
}

pub fn grams_to_newtons(g: f64) -> f64 {
    g / 1000.0 * STANDARD_GRAVITY
}

pub fn newtons_to_grams(n: f64) -> f64 {
    n / STANDARD_GRAVITY * 1000.0
}

/// Sea-level thrust-to-weight ratio at full throttle.
pub fn thrust_to_weight(cfg: &AirframeConfig) -> f64 {
    cfg.motors.max_thrust_per_motor * cfg.n_motors as f64 / cfg.total_mass
}

/// Propeller thrust in N at `rpm` with axial inflow `v0` (m/s).
///
/// `F = ρ0·A·(Vp² − Vp·v0)·(d / (3.29546·pitch))^1.5` with `Vp` the pitch
/// speed and `A` the disk area. The disk diameter is `0.0254·d` metres.
/// Setting `as_printed` swaps in `(0.0254 + d)` for the diameter term, the
/// typeset variant of the formula, which is kept only for comparison.
///
/// The result goes negative once `v0` exceeds the pitch speed.
pub fn prop_thrust(prop: &PropSpec, rpm: f64, v0: f64, as_printed: bool) -> f64 {
    let vp = prop.pitch_speed(rpm);
    let disk = if as_printed {
        INCH_M + prop.diameter
    } else {
        INCH_M * prop.diameter
    };
    let area = std::f64::consts::PI * disk * disk / 4.0;
    let correction = (prop.diameter / (3.29546 * prop.pitch)).powf(1.5);
    SEA_LEVEL_RHO * area * (vp * vp - vp * v0) * correction
}

/// Scales a sea-level static thrust to altitude `h` by the density ratio.
pub fn thrust_at_altitude(static_thrust_sl: f64, h: f64, atmo: &AtmosphereModel) -> Result<f64> {
    Ok(static_thrust_sl * atmo.density_ratio(h)?)
}

/// Sea-level static thrust needed to still produce `target` at altitude `h`.
pub fn required_static_thrust(target: f64, h: f64, atmo: &AtmosphereModel) -> Result<f64> {
    Ok(target / atmo.density_ratio(h)?)
}

/// Altitude where the full-throttle thrust-to-weight ratio falls to 1.
pub fn service_ceiling(cfg: &AirframeConfig, atmo: &AtmosphereModel) -> Result<f64> {
    let tw = thrust_to_weight(cfg);
    if !(tw > 1.0) {
        return Err(Error::domain(format!(
            "sea-level thrust-to-weight {tw:.4} does not exceed 1, no service ceiling"
        )));
    }
    let excess = |h: f64| -> Result<f64> { Ok(tw * atmo.density_ratio(h)? - 1.0) };
    if excess(TROPOPAUSE_M)? > 0.0 {
        return Err(Error::domain(
            "service ceiling lies above the troposphere model range",
        ));
    }
    let (mut lo, mut hi) = (0.0, TROPOPAUSE_M);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Highest level forward speed at full rpm, km/h.
///
/// The rotor disk tilts by θ so that the thrust vector both carries the
/// weight and balances body drag `½·ρ0·CdA·v²`. Propeller inflow is taken as
/// the free-stream speed. For each θ the vertical balance fixes the
/// per-motor thrust and hence the speed; the horizontal residual is
/// monotone in θ, so bisection finds the unique equilibrium.
pub fn max_progressive_speed(cfg: &AirframeConfig) -> Result<f64> {
    let n = cfg.n_motors as f64;
    let weight = cfg.weight_newtons();
    let rpm = cfg.prop.max_rpm;
    let vp = cfg.prop.pitch_speed(rpm);
    let static_thrust = prop_thrust(&cfg.prop, rpm, 0.0, false);
    if !(n * static_thrust > weight) {
        return Err(Error::domain(
            "propellers at full rpm cannot carry the airframe weight",
        ));
    }
    // F(v) = k·Vp·(Vp − v)
    let k = static_thrust / (vp * vp);
    let speed_at = |theta: f64| vp - weight / (n * theta.cos()) / (k * vp);
    let drag = |v: f64| 0.5 * SEA_LEVEL_RHO * cfg.body_drag_area * v * v;
    let residual = |theta: f64| weight * theta.tan() - drag(speed_at(theta).max(0.0));

    let theta_hover_limit = (weight / (n * static_thrust)).acos();
    let mut lo = 0.0_f64;
    let mut hi = theta_hover_limit.min(80f64.to_radians());
    if residual(lo) >= 0.0 {
        return Ok(speed_at(lo).min(vp) * 3.6);
    }
    if residual(hi) < 0.0 {
        return Ok(speed_at(hi).max(0.0) * 3.6);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (speed_at(lo) - speed_at(hi)).abs() * 3.6 < 1e-9 {
            break;
        }
    }
    Ok(speed_at(0.5 * (lo + hi)).min(vp) * 3.6)
}

pub fn beaufort_to_kmh(bft: u8) -> Result<f64> {
    BEAUFORT_KMH
        .get(bft as usize)
        .copied()
        .ok_or_else(|| Error::domain(format!("Beaufort force {bft} outside 0..=12")))
}

/// Downwind displacement over `duration` seconds when the wind exceeds the
/// airframe's best forward speed, m.
pub fn wind_drift(wind_kmh: f64, vmax_kmh: f64, duration_s: f64) -> f64 {
    (wind_kmh - vmax_kmh).max(0.0) / 3.6 * duration_s
}

/// Maximum continuous discharge current, A.
pub fn battery_max_load(b: &BatterySpec) -> f64 {
    b.capacity_ah() * b.c_rate
}

/// Flight time on `usable_fraction` of the pack at a constant draw, s.
pub fn endurance(b: &BatterySpec, avg_current: f64, usable_fraction: f64) -> Result<f64> {
    if !(avg_current > 0.0) {
        return Err(Error::domain("average current must be positive"));
    }
    let max = battery_max_load(b);
    if avg_current > max {
        return Err(Error::domain(format!(
            "average current {avg_current} A exceeds the pack limit {max} A"
        )));
    }
    if !(usable_fraction > 0.0 && usable_fraction <= 1.0) {
        return Err(Error::domain("usable fraction must lie in (0, 1]"));
    }
    Ok(b.capacity_ah() / avg_current * 3600.0 * usable_fraction)
}

/// Flights of `flight_minutes` that fit in one MTBF period.
pub fn expected_flights(mtbf_h: f64, flight_minutes: f64) -> Result<u64> {
    if !(mtbf_h > 0.0 && flight_minutes > 0.0) {
        return Err(Error::domain("MTBF and flight duration must be positive"));
    }
    Ok((mtbf_h * 60.0 / flight_minutes).floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(thrust: f64, n: u32, mass: f64) -> AirframeConfig {
        let mut c = AirframeConfig::reference();
        c.motors.max_thrust_per_motor = thrust;
        c.n_motors = n;
        c.total_mass = mass;
        c
    }

    fn prop_10x45() -> PropSpec {
        PropSpec {
            diameter: 10.0,
            pitch: 4.5,
            max_rpm: 10_000.0,
        }
    }

    #[test]
    fn motor_size_code() {
        let m = MotorSpec {
            size_code: 2204,
            kv: 2300.0,
            max_thrust_per_motor: 600.0,
            operating_voltage: 11.1,
        };
        assert_eq!(m.stator_diameter_mm(), 22);
        assert_eq!(m.stator_height_mm(), 4);
    }

    #[test]
    fn thrust_to_weight_examples() {
        assert_eq!(thrust_to_weight(&cfg(500.0, 4, 2000.0)), 1.0);
        assert!((thrust_to_weight(&cfg(1400.0, 4, 2000.0)) - 2.8).abs() < 1e-12);
        assert_eq!(thrust_to_weight(&cfg(1000.0, 6, 3000.0)), 2.0);
        assert_eq!(thrust_to_weight(&AirframeConfig::reference()), 2.0);
    }

    #[test]
    fn prop_thrust_static_value() {
        let f = prop_thrust(&prop_10x45(), 8000.0, 0.0, false);
        assert!((f - 7.98308).abs() < 1e-4, "{f}");
    }

    #[test]
    fn prop_thrust_inflow() {
        let p = prop_10x45();
        let vp = p.pitch_speed(8000.0);
        assert!((vp - 15.24).abs() < 1e-12);
        assert!(prop_thrust(&p, 8000.0, vp, false).abs() < 1e-12);
        let half = prop_thrust(&p, 8000.0, vp / 2.0, false);
        let full = prop_thrust(&p, 8000.0, 0.0, false);
        assert!((half - full / 2.0).abs() < 1e-12);
        assert!(prop_thrust(&p, 8000.0, vp + 1.0, false) < 0.0);
    }

    #[test]
    fn prop_thrust_as_printed_differs() {
        let p = prop_10x45();
        let mult = prop_thrust(&p, 8000.0, 0.0, false);
        let printed = prop_thrust(&p, 8000.0, 0.0, true);
        let expected_ratio = (10.0254f64 / 0.254).powi(2);
        assert!((printed / mult - expected_ratio).abs() < 1e-9);
    }

    #[test]
    fn reference_prop_matches_motor_rating() {
        let c = AirframeConfig::reference();
        let g = newtons_to_grams(prop_thrust(&c.prop, c.prop.max_rpm, 0.0, false));
        assert!((g - c.motors.max_thrust_per_motor).abs() < 1.0, "{g}");
    }

    #[test]
    fn altitude_thrust_scaling() {
        let atmo = AtmosphereModel::isa();
        assert_eq!(thrust_at_altitude(5586.0, 0.0, &atmo).unwrap(), 5586.0);
        let t = thrust_at_altitude(5586.0, 6096.0, &atmo).unwrap();
        assert!((t - 2976.28).abs() < 0.05, "{t}");
        let t3 = thrust_at_altitude(1000.0, 3000.0, &atmo).unwrap();
        assert!((t3 - 1000.0 * 0.9091216 / 1.2249995).abs() < 1e-3);
        assert!(thrust_at_altitude(1.0, 12_000.0, &atmo).is_err());
    }

    #[test]
    fn required_static_examples() {
        let atmo = AtmosphereModel::isa();
        let r = required_static_thrust(3000.0, 6096.0, &atmo).unwrap();
        assert!((r - 5630.51).abs() < 0.05, "{r}");
        assert!(((r - 5586.0) / 5586.0).abs() < 0.015);
        assert_eq!(required_static_thrust(1234.0, 0.0, &atmo).unwrap(), 1234.0);
        let r2 = required_static_thrust(2000.0, 3000.0, &atmo).unwrap();
        assert!((r2 - 2694.908).abs() < 1e-2, "{r2}");
    }

    #[test]
    fn ceiling_for_tw_two() {
        let atmo = AtmosphereModel::isa();
        let h = service_ceiling(&AirframeConfig::reference(), &atmo).unwrap();
        assert!((h - 6662.77).abs() < 1.0, "{h}");
        let tw = 2.0 * atmo.density_ratio(h).unwrap();
        assert!((tw - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ceiling_limits() {
        let atmo = AtmosphereModel::isa();
        assert!(service_ceiling(&cfg(500.0, 4, 2000.0), &atmo).is_err());
        let h = service_ceiling(&cfg(500.05, 4, 2000.0), &atmo).unwrap();
        assert!(h < 20.0, "{h}");
        let mut hs = Vec::new();
        for t in [700.0, 1000.0, 1300.0] {
            hs.push(service_ceiling(&cfg(t, 4, 2000.0), &atmo).unwrap());
        }
        assert!(hs[0] < hs[1] && hs[1] < hs[2]);
    }

    /// Scan forward speed finely and keep the largest speed at which the
    /// available thrust covers the vector sum of weight and drag.
    fn brute_force_speed(c: &AirframeConfig) -> f64 {
        let w = c.weight_newtons();
        let n = c.n_motors as f64;
        let mut best = 0.0;
        let mut v = 0.0;
        while v < 200.0 {
            let f = prop_thrust(&c.prop, c.prop.max_rpm, v, false);
            if f <= 0.0 {
                break;
            }
            let d = 0.5 * 1.225 * c.body_drag_area * v * v;
            if n * f >= w.hypot(d) {
                best = v;
            }
            v += 0.0005;
        }
        best * 3.6
    }

    #[test]
    fn progressive_speed_reference() {
        let c = AirframeConfig::reference();
        let v = max_progressive_speed(&c).unwrap();
        assert!(v >= 75.0, "{v}");
        assert!((v - brute_force_speed(&c)).abs() < 0.1, "{v}");
    }

    #[test]
    fn progressive_speed_drag_free() {
        let mut c = AirframeConfig::reference();
        c.body_drag_area = 0.0;
        let v = max_progressive_speed(&c).unwrap();
        let vp = c.prop.pitch_speed(c.prop.max_rpm) * 3.6;
        assert!(v <= vp);
        assert!((v - brute_force_speed(&c)).abs() < 0.1, "{v}");
    }

    #[test]
    fn progressive_speed_falls_with_mass() {
        let c = AirframeConfig::reference();
        let mut heavy = c;
        heavy.total_mass *= 1.5;
        assert!(max_progressive_speed(&heavy).unwrap() < max_progressive_speed(&c).unwrap());
        let mut too_heavy = c;
        too_heavy.total_mass *= 2.01;
        assert!(max_progressive_speed(&too_heavy).is_err());
    }

    #[test]
    fn beaufort_table() {
        assert_eq!(beaufort_to_kmh(9).unwrap(), 75.0);
        assert_eq!(beaufort_to_kmh(0).unwrap(), 0.0);
        assert_eq!(beaufort_to_kmh(12).unwrap(), 118.0);
        assert!(beaufort_to_kmh(13).is_err());
        assert!(BEAUFORT_KMH.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn drift_examples() {
        assert_eq!(wind_drift(60.0, 75.0, 180.0), 0.0);
        assert_eq!(wind_drift(75.0, 75.0, 180.0), 0.0);
        assert!((wind_drift(118.0, 75.0, 180.0) - 2150.0).abs() < 1e-9);
        assert!((wind_drift(93.0, 75.0, 60.0) - 300.0).abs() < 1e-9);
    }

    #[test]
    fn battery_examples() {
        let pack = |cap, c| BatterySpec {
            capacity: cap,
            c_rate: c,
            nominal_voltage: 3.7,
            cells: 4,
        };
        assert_eq!(battery_max_load(&pack(5000.0, 50.0)), 250.0);
        assert_eq!(battery_max_load(&pack(1000.0, 1.0)), 1.0);
        assert!((battery_max_load(&pack(2200.0, 30.0)) - 66.0).abs() < 1e-12);

        let b = pack(5000.0, 50.0);
        assert!((endurance(&b, 30.0, 1.0).unwrap() - 600.0).abs() < 1e-9);
        assert!((endurance(&b, 30.0, 0.8).unwrap() - 480.0).abs() < 1e-9);
        assert!((endurance(&b, 250.0, 0.8).unwrap() - 5.0 / 250.0 * 3600.0 * 0.8).abs() < 1e-9);
        assert!(endurance(&b, 250.1, 0.8).is_err());
        assert!(endurance(&b, 0.0, 0.8).is_err());
    }

    #[test]
    fn reliability_examples() {
        assert_eq!(expected_flights(160.0, 10.0).unwrap(), 960);
        assert_eq!(expected_flights(1.0, 60.0).unwrap(), 1);
        assert_eq!(expected_flights(160.0, 8.0).unwrap(), 1200);
        assert!(expected_flights(0.0, 8.0).is_err());
    }

    #[test]
    fn validation_catches_bad_fields() {
        assert!(AirframeConfig::reference().validate().is_ok());
        let mut c = AirframeConfig::reference();
        c.n_motors = 0;
        assert!(c.validate().is_err());
        let mut c = AirframeConfig::reference();
        c.body_drag_area = -1.0;
        assert!(c.validate().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn thrust_falls_with_inflow(rpm in 1000.0f64..15000.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
                let p = PropSpec { diameter: 10.0, pitch: 4.5, max_rpm: 15000.0 };
                let vp = p.pitch_speed(rpm);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assume!(hi - lo > 1e-6);
                prop_assert!(prop_thrust(&p, rpm, hi * vp, false) < prop_thrust(&p, rpm, lo * vp, false));
            }

            #[test]
            fn static_thrust_is_quadratic_in_rpm(rpm in 100.0f64..7000.0) {
                let p = PropSpec { diameter: 7.0, pitch: 8.0, max_rpm: 15000.0 };
                let r = prop_thrust(&p, 2.0 * rpm, 0.0, false) / prop_thrust(&p, rpm, 0.0, false);
                prop_assert!((r - 4.0).abs() < 1e-9);
            }

            #[test]
            fn doubling_mass_halves_ratio(mass in 100.0f64..10000.0) {
                let mut c = AirframeConfig::reference();
                c.total_mass = mass;
                let a = thrust_to_weight(&c);
                c.total_mass = 2.0 * mass;
                prop_assert_eq!(thrust_to_weight(&c), a / 2.0);
            }

            #[test]
            fn thrust_scaling_round_trips(t in 1.0f64..10000.0, h in 0.0f64..11000.0) {
                let atmo = AtmosphereModel::isa();
                let back = required_static_thrust(thrust_at_altitude(t, h, &atmo).unwrap(), h, &atmo).unwrap();
                prop_assert!(((back - t) / t).abs() < 1e-9);
            }

            #[test]
            fn drift_is_piecewise_linear(w in 0.0f64..200.0, v in 0.0f64..120.0, t in 0.0f64..600.0) {
                let d = wind_drift(w, v, t);
                if w <= v {
                    prop_assert_eq!(d, 0.0);
                } else {
                    prop_assert!((d - (w - v) / 3.6 * t).abs() < 1e-9);
                }
            }
        }
    }
}
