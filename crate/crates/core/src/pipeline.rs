//! History-derived distributions and the scenario pipeline that turns a
//! day-ahead forecast into a weighted scenario set.

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forecast::DayAheadForecast;
use crate::plant::PlantConfig;
use crate::prob::{
    combine, forecast_matrix, historical_demand_matrix, historical_pv_matrix, hourly_stats, BinAxis, HourlyStats,
    MatrixKind, ProbabilityMatrix, Quantity, RangeSpec,
};
use crate::scenario::{apply_night_mask, generate, score, select_top, with_scores, SamplingMode, ScenarioSet};
use crate::series::HourlySeries;
use crate::solar::{build_envelope, GeoLocation, PvEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StochasticSettings {
    /// Bins per hour (R).
    pub bins: usize,
    /// Scenarios drawn (S).
    pub samples: usize,
    /// Scenarios kept for planning (ŝ).
    pub keep: usize,
    /// Weight of the forecast matrix against the historical one.
    pub lambda: f64,
    pub mode: SamplingMode,
    /// Demand range upper edge as a multiple of the historical maximum.
    pub demand_headroom: f64,
}

impl Default for StochasticSettings {
    fn default() -> Self {
        Self {
            bins: 100,
            samples: 100,
            keep: 10,
            lambda: 0.5,
            mode: SamplingMode::Coherent,
            demand_headroom: 1.1,
        }
    }
}

impl StochasticSettings {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config(format!("bins must be at least 2, got {}", self.bins)));
        }
        if self.keep == 0 || self.keep > self.samples {
            return Err(Error::Config(format!(
                "keep ({}) must lie in 1..=samples ({})",
                self.keep, self.samples
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(self.demand_headroom >= 1.0 && self.demand_headroom.is_finite()) {
            return Err(Error::Config("demand_headroom must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything the stochastic planner learns from history.
#[derive(Debug, Clone)]
pub struct HistoryModel {
    pub envelope: PvEnvelope,
    pub gen_stats: HourlyStats,
    pub dem_stats: HourlyStats,
    /// PV classes relative to the envelope.
    pub gen_hist: ProbabilityMatrix,
    pub dem_hist: ProbabilityMatrix,
    pub dem_range: RangeSpec,
}

impl HistoryModel {
    pub fn build(
        pv: &HourlySeries,
        demand: &HourlySeries,
        loc: &GeoLocation,
        plant: &PlantConfig,
        settings: &StochasticSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let peak = demand.values.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::InsufficientData("historical demand is zero everywhere".into()));
        }
        let dem_range = RangeSpec::new(0.0, peak * settings.demand_headroom, settings.bins)?;
        let envelope = build_envelope(pv, loc, plant)?;
        Ok(Self {
            gen_stats: hourly_stats(pv, plant.p_pv_max / settings.bins as f64)?,
            dem_stats: hourly_stats(demand, dem_range.width())?,
            gen_hist: historical_pv_matrix(pv, &envelope, settings.bins)?,
            dem_hist: historical_demand_matrix(demand, dem_range)?,
            envelope,
            dem_range,
        })
    }

    /// Uses every record before `date`.
    pub fn from_dataset(
        data: &Dataset,
        date: NaiveDate,
        loc: &GeoLocation,
        plant: &PlantConfig,
        settings: &StochasticSettings,
    ) -> Result<Self> {
        let (pv, dem) = data.history_before(date)?;
        Self::build(&pv, &dem, loc, plant, settings)
    }

    pub fn bins(&self) -> usize {
        self.dem_range.bins
    }

    /// Historical PV and demand matrices laid on the kW axes of one day.
    pub fn historical_for_day(&self, day_of_year: u32) -> Result<(ProbabilityMatrix, ProbabilityMatrix)> {
        let axis = BinAxis::from_envelope(&self.envelope, day_of_year, self.bins())?;
        Ok((self.gen_hist.project(axis)?, self.dem_hist.clone()))
    }

    /// Forecast matrices of one day.
    pub fn forecast_for_day(
        &self,
        fc: &DayAheadForecast,
        day_of_year: u32,
    ) -> Result<(ProbabilityMatrix, ProbabilityMatrix)> {
        let axis = BinAxis::from_envelope(&self.envelope, day_of_year, self.bins())?;
        Ok((
            forecast_matrix(&fc.gen, &self.gen_stats, &axis, Quantity::Generation)?,
            forecast_matrix(&fc.dem, &self.dem_stats, &BinAxis::Uniform(self.dem_range), Quantity::Demand)?,
        ))
    }

    /// Combined matrices for one day.
    pub fn total_for_day(
        &self,
        fc: &DayAheadForecast,
        day_of_year: u32,
        lambda: f64,
    ) -> Result<(ProbabilityMatrix, ProbabilityMatrix)> {
        let (gf, df) = self.forecast_for_day(fc, day_of_year)?;
        let (gh, dh) = self.historical_for_day(day_of_year)?;
        Ok((combine(&gf, &gh, lambda)?, combine(&df, &dh, lambda)?))
    }
}

/// Draw, score, keep the most probable, zero night PV and fold duplicates.
pub fn scenarios_from_totals<R: Rng + ?Sized>(
    gen: &ProbabilityMatrix,
    dem: &ProbabilityMatrix,
    settings: &StochasticSettings,
    loc: &GeoLocation,
    day_of_year: u32,
    rng: &mut R,
) -> Result<ScenarioSet> {
    settings.validate()?;
    if gen.kind != MatrixKind::Total || dem.kind != MatrixKind::Total {
        return Err(Error::invalid("scenario pipeline expects total matrices"));
    }
    let drawn = generate(gen, dem, settings.samples, settings.mode, rng)?;
    let scores = score(&drawn, gen, dem);
    let top = select_top(&with_scores(drawn, &scores)?, settings.keep)?;
    let mut set = apply_night_mask(&top, loc, day_of_year)?.merge_duplicates();
    if set.len() == 1 {
        set.scenarios[0].prob = 1.0;
    }
    Ok(set)
}
