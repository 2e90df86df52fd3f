//! Sun geometry, clear-sky irradiance and the feasible PV envelope used to
//! strip seasonality out of historical PV records.
//!
//! Timestamps are interpreted as local solar time: the hour angle is
//! `15° · (hour − 12)` with no equation-of-time or longitude correction.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::PlantConfig;
use crate::series::{HourlySeries, HOURS_PER_DAY};

/// Below this (kW) an envelope hour is treated as night.
pub const NIGHT_EPS_KW: f64 = 1e-6;

/// Half-width of the rolling window used for the historical minimum.
pub const ENVELOPE_HALF_WINDOW_DAYS: i32 = 30;

const DAYS: usize = 366;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoLocation {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        let loc = Self {
            latitude,
            longitude,
        };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::invalid(format!(
                "latitude {} outside [-90, 90]",
                self.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::invalid(format!(
                "longitude {} outside [-180, 180]",
                self.longitude
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    /// degrees
    pub declination: f64,
    /// degrees
    pub hour_angle: f64,
    pub cos_zenith: f64,
}

impl SolarPosition {
    pub fn zenith_deg(&self) -> f64 {
        self.cos_zenith.acos().to_degrees()
    }

    pub fn is_night(&self) -> bool {
        self.cos_zenith <= 0.0
    }
}

pub fn solar_position(loc: &GeoLocation, day_of_year: u32, hour: u32) -> Result<SolarPosition> {
    loc.validate()?;
    if !(1..=366).contains(&day_of_year) {
        return Err(Error::invalid(format!(
            "day of year {day_of_year} outside [1, 366]"
        )));
    }
    if hour > 23 {
        return Err(Error::invalid(format!("hour {hour} outside [0, 23]")));
    }
    let declination = 23.45 * (360.0 * (284.0 + day_of_year as f64) / 365.0).to_radians().sin();
    let hour_angle = 15.0 * (hour as f64 - 12.0);
    let (phi, delta, omega) = (
        loc.latitude.to_radians(),
        declination.to_radians(),
        hour_angle.to_radians(),
    );
    let cos_zenith = (phi.sin() * delta.sin() + phi.cos() * delta.cos() * omega.cos()).clamp(-1.0, 1.0);
    Ok(SolarPosition {
        declination,
        hour_angle,
        cos_zenith,
    })
}

/// Haurwitz clear-sky global horizontal irradiance, W/m².
pub fn clear_sky_ghi(pos: &SolarPosition) -> f64 {
    haurwitz(pos.cos_zenith)
}

pub(crate) fn haurwitz(cos_zenith: f64) -> f64 {
    if cos_zenith <= 0.0 {
        return 0.0;
    }
    1098.0 * cos_zenith * (-0.057 / cos_zenith).exp()
}

/// AC power in kW for a given irradiance; single derate, inverter-capped.
pub fn pv_power_from_ghi(ghi: f64, plant: &PlantConfig) -> f64 {
    let ghi = ghi.max(0.0);
    (plant.pv_stc * (ghi / 1000.0) * plant.pv_derate).min(plant.p_pv_max)
}

/// Theoretical maximum PV output at (day of year, hour).
pub fn clear_sky_pv(loc: &GeoLocation, plant: &PlantConfig, day_of_year: u32, hour: u32) -> Result<f64> {
    let pos = solar_position(loc, day_of_year, hour)?;
    Ok(pv_power_from_ghi(clear_sky_ghi(&pos), plant))
}

/// Per (day of year, hour) bounds of feasible PV output.
///
/// `p_max` comes from sun geometry and is defined for every day. `p_min` is
/// the lowest clamped observation at the same hour within ±30 days (wrapping
/// the year) and exists only for days whose whole window is covered by the
/// history.
#[derive(Debug, Clone, PartialEq)]
pub struct PvEnvelope {
    p_max: Vec<[f64; HOURS_PER_DAY]>,
    p_min: Vec<Option<[f64; HOURS_PER_DAY]>>,
}

impl PvEnvelope {
    fn index(day_of_year: u32) -> Result<usize> {
        if !(1..=366).contains(&day_of_year) {
            return Err(Error::invalid(format!(
                "day of year {day_of_year} outside [1, 366]"
            )));
        }
        Ok(day_of_year as usize - 1)
    }

    pub fn p_max(&self, day_of_year: u32, hour: usize) -> Result<f64> {
        Ok(self.p_max[Self::index(day_of_year)?][hour])
    }

    pub fn p_min(&self, day_of_year: u32, hour: usize) -> Result<f64> {
        self.p_min[Self::index(day_of_year)?]
            .map(|row| row[hour])
            .ok_or_else(|| {
                Error::InsufficientHistory(format!(
                    "the ±{ENVELOPE_HALF_WINDOW_DAYS}-day window around day {day_of_year} is not covered by the PV history"
                ))
            })
    }

    /// `(p_min, p_max)` for all 24 hours of a day.
    pub fn day(&self, day_of_year: u32) -> Result<([f64; HOURS_PER_DAY], [f64; HOURS_PER_DAY])> {
        let i = Self::index(day_of_year)?;
        let lo = self.p_min[i].ok_or_else(|| {
            Error::InsufficientHistory(format!(
                "the ±{ENVELOPE_HALF_WINDOW_DAYS}-day window around day {day_of_year} is not covered by the PV history"
            ))
        })?;
        Ok((lo, self.p_max[i]))
    }

    pub fn is_covered(&self, day_of_year: u32) -> bool {
        Self::index(day_of_year)
            .map(|i| self.p_min[i].is_some())
            .unwrap_or(false)
    }
}

/// Days 1..=365 on a circle; day 366 shares a slot with day 365.
fn window_slot(day_of_year: u32) -> usize {
    (day_of_year.min(365) - 1) as usize
}

pub fn build_envelope(history: &HourlySeries, loc: &GeoLocation, plant: &PlantConfig) -> Result<PvEnvelope> {
    loc.validate()?;
    let mut p_max = vec![[0.0; HOURS_PER_DAY]; DAYS];
    for (d, row) in p_max.iter_mut().enumerate() {
        for (h, v) in row.iter_mut().enumerate() {
            *v = clear_sky_pv(loc, plant, d as u32 + 1, h as u32)?;
        }
    }

    // Per-slot, per-hour minimum of clamped observations.
    let mut slot_min = vec![[f64::INFINITY; HOURS_PER_DAY]; 365];
    let mut clamped = 0usize;
    for s in history.samples() {
        let cap = p_max[s.day_of_year as usize - 1][s.hour];
        let mut x = s.value.max(0.0);
        if x > cap {
            clamped += 1;
            x = cap;
        }
        let cell = &mut slot_min[window_slot(s.day_of_year)][s.hour];
        *cell = cell.min(x);
    }
    if clamped > 0 {
        warn!("{clamped} PV observations exceeded the clear-sky maximum and were clamped");
    }

    let mut p_min = vec![None; DAYS];
    let mut any = false;
    for (d, out) in p_min.iter_mut().enumerate() {
        let centre = window_slot(d as u32 + 1) as i32;
        let mut row = [f64::INFINITY; HOURS_PER_DAY];
        let mut covered = true;
        'window: for k in -ENVELOPE_HALF_WINDOW_DAYS..=ENVELOPE_HALF_WINDOW_DAYS {
            let slot = (centre + k).rem_euclid(365) as usize;
            for h in 0..HOURS_PER_DAY {
                let v = slot_min[slot][h];
                if !v.is_finite() {
                    covered = false;
                    break 'window;
                }
                row[h] = row[h].min(v);
            }
        }
        if covered {
            for h in 0..HOURS_PER_DAY {
                row[h] = row[h].clamp(0.0, p_max[d][h]);
            }
            *out = Some(row);
            any = true;
        }
    }
    if !any {
        return Err(Error::InsufficientHistory(format!(
            "PV history of {} hours does not cover any full ±{ENVELOPE_HALF_WINDOW_DAYS}-day window",
            history.len()
        )));
    }
    Ok(PvEnvelope { p_max, p_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn london() -> GeoLocation {
        GeoLocation::new(51.5, -0.1).unwrap()
    }

    #[test]
    fn equinox_noon_on_the_equator_is_overhead() {
        let pos = solar_position(&GeoLocation::new(0.0, 0.0).unwrap(), 81, 12).unwrap();
        // 23.45·sin(360°·365/365) is zero up to rounding
        assert!(pos.declination.abs() < 1e-9);
        assert!((pos.cos_zenith - 1.0).abs() < 1e-12);
    }

    #[test]
    fn midsummer_noon_zenith() {
        let pos = solar_position(&london(), 172, 12).unwrap();
        let decl = 23.45 * (360.0f64 * 456.0 / 365.0).to_radians().sin();
        assert!((pos.zenith_deg() - (51.5 - decl)).abs() < 1e-9);
        assert!((pos.zenith_deg() - 28.1).abs() < 0.1);
    }

    #[test]
    fn midnight_is_night() {
        for lat in [-60.0, -20.0, 0.0, 35.0, 51.5, 65.0] {
            for day in [1, 80, 172, 266, 355] {
                let pos = solar_position(&GeoLocation::new(lat, 0.0).unwrap(), day, 0).unwrap();
                assert!(pos.cos_zenith < 0.0, "lat {lat} day {day}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(solar_position(&london(), 0, 12).is_err());
        assert!(solar_position(&london(), 367, 12).is_err());
        assert!(solar_position(&london(), 10, 24).is_err());
        assert!(GeoLocation::new(91.0, 0.0).is_err());
        assert!(GeoLocation::new(0.0, -181.0).is_err());
    }

    #[test]
    fn haurwitz_values() {
        assert_eq!(haurwitz(0.0), 0.0);
        assert_eq!(haurwitz(-0.3), 0.0);
        let overhead = 1098.0 * (-0.057f64).exp();
        assert!((haurwitz(1.0) - overhead).abs() < 1e-12);
        assert!((haurwitz(1.0) - 1037.2).abs() < 0.05);
        assert!(haurwitz(0.5) < haurwitz(0.9));
    }

    #[test]
    fn pv_conversion() {
        let plant = PlantConfig::default();
        assert_eq!(pv_power_from_ghi(0.0, &plant), 0.0);
        assert!((pv_power_from_ghi(1000.0, &plant) - 8.5).abs() < 1e-12);
        let capped = PlantConfig {
            p_pv_max: 12.0,
            ..plant
        };
        assert_eq!(pv_power_from_ghi(2000.0, &capped), 12.0);
    }

    fn year_series(f: impl Fn(u32, usize) -> f64) -> HourlySeries {
        let start = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        let series = HourlySeries::new(start, vec![0.0; 365 * 24]);
        let values = series.samples().map(|s| f(s.day_of_year, s.hour)).collect();
        HourlySeries::new(start, values)
    }

    #[test]
    fn zero_history_gives_zero_minimum() {
        let plant = PlantConfig::default();
        let env = build_envelope(&year_series(|_, _| 0.0), &london(), &plant).unwrap();
        for d in 1..=366 {
            for h in 0..24 {
                assert_eq!(env.p_min(d, h).unwrap(), 0.0);
            }
        }
        // night
        assert_eq!(env.p_max(172, 1).unwrap(), 0.0);
    }

    #[test]
    fn constant_ratio_history() {
        let plant = PlantConfig::default();
        let loc = london();
        let series = year_series(|d, h| 0.5 * clear_sky_pv(&loc, &plant, d, h as u32).unwrap());
        let env = build_envelope(&series, &loc, &plant).unwrap();
        // The window minimum of 0.5·p_max is attained at the window edge furthest
        // from the solstice, so check the definition directly.
        for d in [10u32, 100, 172, 300] {
            for h in 0..24 {
                let expect = (-30i32..=30)
                    .map(|k| {
                        let dd = ((d as i32 - 1 + k).rem_euclid(365) + 1) as u32;
                        0.5 * clear_sky_pv(&loc, &plant, dd, h as u32).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!((env.p_min(d, h).unwrap() - expect).abs() < 1e-12);
                assert!(env.p_min(d, h).unwrap() <= env.p_max(d, h).unwrap());
            }
        }
        // At the summer solstice the window is symmetric around the peak, and
        // at noon the ratio is close to one half.
        let ratio = env.p_min(172, 12).unwrap() / env.p_max(172, 12).unwrap();
        assert!(ratio > 0.45 && ratio <= 0.5);
    }

    #[test]
    fn spikes_are_clamped() {
        let plant = PlantConfig::default();
        let env = build_envelope(&year_series(|_, _| 50.0), &london(), &plant).unwrap();
        for d in [1u32, 172, 366] {
            for h in 0..24 {
                let (lo, hi) = (env.p_min(d, h).unwrap(), env.p_max(d, h).unwrap());
                assert!(lo <= hi + 1e-12 && hi <= plant.p_pv_max);
            }
        }
    }

    #[test]
    fn short_history_is_rejected() {
        let plant = PlantConfig::default();
        let start = Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap();
        let short = HourlySeries::new(start, vec![0.1; 60 * 24]);
        assert!(matches!(
            build_envelope(&short, &london(), &plant),
            Err(Error::InsufficientHistory(_))
        ));
        let enough = HourlySeries::new(start, vec![0.1; 61 * 24]);
        let env = build_envelope(&enough, &london(), &plant).unwrap();
        // 2021-03-01 is day 60, so only day 90 has a full window
        assert!(env.is_covered(90));
        assert!(!env.is_covered(89) && !env.is_covered(91));
        assert!(env.p_min(10, 12).is_err());
    }

    #[test]
    fn envelope_is_periodic_in_years() {
        let plant = PlantConfig::default();
        let a = year_series(|d, h| (d as f64 * 0.01 + h as f64 * 0.1).sin().abs());
        let b = HourlySeries::new(
            Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
            a.values.clone(),
        );
        let ea = build_envelope(&a, &london(), &plant).unwrap();
        let eb = build_envelope(&b, &london(), &plant).unwrap();
        assert_eq!(ea, eb);
    }
}
