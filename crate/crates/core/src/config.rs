//! Run configuration, loadable from TOML. Every field has a default, so an
//! empty file is a valid configuration.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::SynthSpec;
use crate::error::{Error, Result};
use crate::forecast::ForecastProvider;
use crate::milp::SolverOptions;
use crate::pipeline::StochasticSettings;
use crate::plant::PlantConfig;
use crate::solar::GeoLocation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub eval_start: NaiveDate,
    pub eval_days: u32,
    pub history_days: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SynthSpec::default();
        Self {
            eval_start: s.eval_start,
            eval_days: s.eval_days,
            history_days: s.history_days,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub location: GeoLocation,
    pub plant: PlantConfig,
    pub stochastic: StochasticSettings,
    pub forecast: ForecastProvider,
    pub solver: SolverOptions,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            location: GeoLocation {
                latitude: 51.5,
                longitude: -0.1,
            },
            plant: PlantConfig::default(),
            stochastic: StochasticSettings::default(),
            forecast: ForecastProvider::default(),
            solver: SolverOptions::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.location.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.plant.validate()?;
        self.stochastic.validate()?;
        self.solver.validate()?;
        if let ForecastProvider::NoisyOracle { alpha_gen, alpha_dem } = self.forecast {
            if !(alpha_gen >= 0.0 && alpha_dem >= 0.0) {
                return Err(Error::Config("forecast noise scales must be non-negative".into()));
            }
        }
        if self.synth.eval_days == 0 {
            return Err(Error::Config("synth.eval_days must be positive".into()));
        }
        Ok(())
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            seed: self.seed,
            eval_start: self.synth.eval_start,
            eval_days: self.synth.eval_days,
            history_days: self.synth.history_days,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.plant.p_pv_max, 12.0);
        assert_eq!(c.stochastic.keep, 10);
    }

    #[test]
    fn round_trip_and_overrides() {
        let text = RunConfig::default().to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), RunConfig::default());
        let c = RunConfig::from_toml_str(
            "seed = 7\n[plant]\ne_cap = 13.5\n[forecast]\nkind = \"persistence\"\n[stochastic]\nmode = \"shuffled\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.plant.e_cap, 13.5);
        assert_eq!(c.plant.p_es_max, 5.0);
        assert_eq!(c.forecast, ForecastProvider::Persistence);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("[stochastic]\nkeep = 0\n").is_err());
        assert!(RunConfig::from_toml_str("[plant]\nsoc_min = 95\n").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1\n").is_err());
    }
}
