//! Day-ahead point forecasts from controllable synthetic providers.

use chrono::{Datelike, Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::prob::HourlyStats;
use crate::scenario::Profile;
use crate::series::HOURS_PER_DAY;
use crate::solar::{solar_position, GeoLocation};

pub const DEFAULT_ALPHA_GEN: f64 = 0.15;
pub const DEFAULT_ALPHA_DEM: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ForecastProvider {
    /// The day's actual values.
    Oracle,
    /// Actuals plus Gaussian noise with standard deviation `α·σ_h`.
    NoisyOracle { alpha_gen: f64, alpha_dem: f64 },
    /// Yesterday's actuals.
    Persistence,
}

impl Default for ForecastProvider {
    fn default() -> Self {
        ForecastProvider::NoisyOracle {
            alpha_gen: DEFAULT_ALPHA_GEN,
            alpha_dem: DEFAULT_ALPHA_DEM,
        }
    }
}

impl ForecastProvider {
    pub fn name(&self) -> &'static str {
        match self {
            ForecastProvider::Oracle => "oracle",
            ForecastProvider::NoisyOracle { .. } => "noisy-oracle",
            ForecastProvider::Persistence => "persistence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayAheadForecast {
    pub gen: Profile,
    pub dem: Profile,
}

/// Derives an independent generator seed for one day and purpose.
pub fn day_seed(seed: u64, date: NaiveDate, purpose: u64) -> u64 {
    // splitmix64 finaliser over the combined key
    let mut z = seed
        ^ (date.num_days_from_ce() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ purpose.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const PURPOSE_FORECAST: u64 = 1;
pub(crate) const PURPOSE_SCENARIOS: u64 = 2;

/// Forecast for `date`. Noise is drawn from a generator keyed on
/// `(seed, date)`, so any day can be reproduced in isolation.
pub fn forecast(
    provider: &ForecastProvider,
    data: &Dataset,
    date: NaiveDate,
    gen_stats: &HourlyStats,
    dem_stats: &HourlyStats,
    loc: &GeoLocation,
    seed: u64,
) -> Result<DayAheadForecast> {
    let (mut gen, mut dem) = match provider {
        ForecastProvider::Oracle => data.actuals(date)?,
        ForecastProvider::Persistence => {
            let prev = date - Duration::days(1);
            data.actuals(prev)
                .map_err(|_| Error::MissingDay(format!("{prev} (needed to forecast {date})")))?
        }
        ForecastProvider::NoisyOracle { alpha_gen, alpha_dem } => {
            if !(*alpha_gen >= 0.0 && *alpha_dem >= 0.0) {
                return Err(Error::Config("forecast noise scales must be non-negative".into()));
            }
            let (mut g, mut d) = data.actuals(date)?;
            let mut rng = ChaCha8Rng::seed_from_u64(day_seed(seed, date, PURPOSE_FORECAST));
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            for h in 0..HOURS_PER_DAY {
                let eg: f64 = unit.sample(&mut rng);
                let ed: f64 = unit.sample(&mut rng);
                g[h] = (g[h] + eg * alpha_gen * gen_stats.sigma[h]).max(0.0);
                d[h] = (d[h] + ed * alpha_dem * dem_stats.sigma[h]).max(0.0);
            }
            (g, d)
        }
    };
    for h in 0..HOURS_PER_DAY {
        if solar_position(loc, date.ordinal(), h as u32)?.is_night() {
            gen[h] = 0.0;
        }
        gen[h] = gen[h].max(0.0);
        dem[h] = dem[h].max(0.0);
    }
    Ok(DayAheadForecast { gen, dem })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, SynthSpec};
    use crate::plant::PlantConfig;

    fn setup() -> (Dataset, GeoLocation, HourlyStats) {
        let loc = GeoLocation::new(51.5, -0.1).unwrap();
        let spec = SynthSpec {
            history_days: 3,
            eval_days: 2,
            ..SynthSpec::default()
        };
        let ds = synthesize(&spec, &loc, &PlantConfig::default()).unwrap();
        let stats = HourlyStats {
            mean: [1.0; 24],
            sigma: [0.5; 24],
        };
        (ds, loc, stats)
    }

    #[test]
    fn oracle_and_zero_noise_return_actuals() {
        let (ds, loc, st) = setup();
        let day = ds.days()[3];
        let a = forecast(&ForecastProvider::Oracle, &ds, day, &st, &st, &loc, 1).unwrap();
        let (g, d) = ds.actuals(day).unwrap();
        assert_eq!(a.gen, g);
        assert_eq!(a.dem, d);
        let z = ForecastProvider::NoisyOracle {
            alpha_gen: 0.0,
            alpha_dem: 0.0,
        };
        let b = forecast(&z, &ds, day, &st, &st, &loc, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn persistence_is_yesterday() {
        let (ds, loc, st) = setup();
        let days = ds.days();
        let f = forecast(&ForecastProvider::Persistence, &ds, days[2], &st, &st, &loc, 0).unwrap();
        let (g, d) = ds.actuals(days[1]).unwrap();
        assert_eq!(f.dem, d);
        assert_eq!(f.gen, g);
        assert!(matches!(
            forecast(&ForecastProvider::Persistence, &ds, days[0], &st, &st, &loc, 0),
            Err(Error::MissingDay(_))
        ));
    }

    #[test]
    fn noisy_forecast_is_seeded_and_nonnegative() {
        let (ds, loc, st) = setup();
        let day = ds.days()[4];
        let p = ForecastProvider::default();
        let a = forecast(&p, &ds, day, &st, &st, &loc, 9).unwrap();
        let b = forecast(&p, &ds, day, &st, &st, &loc, 9).unwrap();
        let c = forecast(&p, &ds, day, &st, &st, &loc, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.gen.iter().chain(a.dem.iter()).all(|v| *v >= 0.0));
        assert_eq!(a.gen[0], 0.0);
    }

    #[test]
    fn noise_scale_converges() {
        // Error spread at a mid-load hour across many seeds.
        let (ds, loc, _) = setup();
        let day = ds.days()[4];
        let (_, actual) = ds.actuals(day).unwrap();
        let sigma = 0.01;
        let st = HourlyStats {
            mean: [0.0; 24],
            sigma: [sigma; 24],
        };
        let p = ForecastProvider::NoisyOracle {
            alpha_gen: 0.0,
            alpha_dem: 0.3,
        };
        let n = 10_000;
        let errs: Vec<f64> = (0..n)
            .map(|s| forecast(&p, &ds, day, &st, &st, &loc, s).unwrap().dem[12] - actual[12])
            .collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((sd / (0.3 * sigma) - 1.0).abs() < 0.05, "sd {sd}");
    }
}
