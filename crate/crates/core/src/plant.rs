//! Plant and tariff parameters shared by planning and simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::HOURS_PER_DAY;

/// Building electrical plant. Defaults are the reference installation:
/// 10 kWp PV behind a 12 kW inverter, 10 kWh battery with a 5 kW inverter,
/// 5 kW grid converter, SoC window 15–90 %.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// PV inverter limit, kW
    pub p_pv_max: f64,
    /// Battery inverter limit, kW
    pub p_es_max: f64,
    /// Grid converter limit, kW
    pub p_gr_max: f64,
    /// Battery capacity, kWh
    pub e_cap: f64,
    /// percent
    pub soc_min: f64,
    /// percent
    pub soc_max: f64,
    /// percent
    pub soc_init: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    /// hours
    pub delta_t: f64,
    /// PV array rating at standard test conditions, kWp
    pub pv_stc: f64,
    pub pv_derate: f64,
    /// €/kWh of unserved load
    pub shed_penalty: f64,
    /// €/kWh on every kWh moved in or out of the battery. Keeps the relaxation
    /// from burning surplus through simultaneous charge and discharge.
    pub throughput_cost: f64,
    /// Require each scenario to end the day at or above `soc_init`.
    pub terminal_soc: bool,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            p_pv_max: 12.0,
            p_es_max: 5.0,
            p_gr_max: 5.0,
            e_cap: 10.0,
            soc_min: 15.0,
            soc_max: 90.0,
            soc_init: 50.0,
            eta_c: 0.95,
            eta_d: 0.95,
            delta_t: 1.0,
            pv_stc: 10.0,
            pv_derate: 0.85,
            shed_penalty: 10.0,
            throughput_cost: 1e-4,
            terminal_soc: false,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_pv_max", self.p_pv_max),
            ("p_es_max", self.p_es_max),
            ("p_gr_max", self.p_gr_max),
            ("e_cap", self.e_cap),
            ("delta_t", self.delta_t),
            ("pv_stc", self.pv_stc),
            ("pv_derate", self.pv_derate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 100.0) {
            return Err(Error::Config(format!(
                "need 0 <= soc_min < soc_max <= 100, got {}..{}",
                self.soc_min, self.soc_max
            )));
        }
        if !(self.soc_min..=self.soc_max).contains(&self.soc_init) {
            return Err(Error::Config(format!(
                "soc_init {} outside [{}, {}]",
                self.soc_init, self.soc_min, self.soc_max
            )));
        }
        for (name, eta) in [("eta_c", self.eta_c), ("eta_d", self.eta_d)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {eta}")));
            }
        }
        if !(self.shed_penalty >= 0.0 && self.throughput_cost >= 0.0) {
            return Err(Error::Config("penalties must be non-negative".into()));
        }
        Ok(())
    }

    /// Stored energy in kWh at a given SoC.
    pub fn energy_at(&self, soc: f64) -> f64 {
        soc * self.e_cap / 100.0
    }

    /// Largest charging power (battery-side input, kW) that keeps SoC ≤ soc_max
    /// over one step.
    pub fn charge_headroom(&self, soc: f64) -> f64 {
        ((self.soc_max - soc) * self.e_cap / (100.0 * self.eta_c * self.delta_t)).max(0.0)
    }

    /// Largest discharging power (delivered, kW) that keeps SoC ≥ soc_min over
    /// one step.
    pub fn discharge_available(&self, soc: f64) -> f64 {
        ((soc - self.soc_min) * self.e_cap * self.eta_d / (100.0 * self.delta_t)).max(0.0)
    }

    /// SoC after charging `charge` kW and discharging `discharge` kW for one step.
    pub fn next_soc(&self, soc: f64, charge: f64, discharge: f64) -> f64 {
        soc + 100.0 * self.delta_t * (self.eta_c * charge - discharge / self.eta_d) / self.e_cap
    }
}

/// Hourly import/export prices for one day, €/kWh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TariffDay {
    pub tou_imp: [f64; HOURS_PER_DAY],
    pub tou_exp: [f64; HOURS_PER_DAY],
}

impl TariffDay {
    pub fn new(tou_imp: [f64; HOURS_PER_DAY], tou_exp: [f64; HOURS_PER_DAY]) -> Result<Self> {
        let t = Self { tou_imp, tou_exp };
        t.validate()?;
        Ok(t)
    }

    pub fn flat(imp: f64, exp: f64) -> Self {
        Self {
            tou_imp: [imp; HOURS_PER_DAY],
            tou_exp: [exp; HOURS_PER_DAY],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .tou_imp
            .iter()
            .chain(self.tou_exp.iter())
            .any(|p| !p.is_finite() || *p < 0.0)
        {
            return Err(Error::invalid("tariffs must be finite and non-negative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        PlantConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_soc_window() {
        let p = PlantConfig {
            soc_min: 90.0,
            soc_max: 15.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = PlantConfig {
            eta_c: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn headroom_round_trips_through_dynamics() {
        let p = PlantConfig::default();
        let soc = 40.0;
        let c = p.charge_headroom(soc);
        assert!((p.next_soc(soc, c, 0.0) - p.soc_max).abs() < 1e-12);
        let d = p.discharge_available(soc);
        assert!((p.next_soc(soc, 0.0, d) - p.soc_min).abs() < 1e-12);
    }

    #[test]
    fn negative_tariff_rejected() {
        let mut t = TariffDay::flat(0.2, 0.1);
        t.tou_exp[3] = -0.1;
        assert!(t.validate().is_err());
    }
}
