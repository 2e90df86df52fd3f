//! Shared fixtures for the benchmarks.

use bems_core::pipeline::scenarios_from_totals;
use bems_core::{
    forecast, synthesize, Dataset, DayAheadForecast, HistoryModel, ProbabilityMatrix, RunConfig, ScenarioSet,
    TariffDay,
};
use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One evaluation day of the bundled dataset with everything upstream of
/// the dispatch solve already computed.
pub struct DayFixture {
    pub cfg: RunConfig,
    pub data: Dataset,
    pub date: NaiveDate,
    pub history: HistoryModel,
    pub forecast: DayAheadForecast,
    pub tariffs: TariffDay,
    pub gen_total: ProbabilityMatrix,
    pub dem_total: ProbabilityMatrix,
    pub scenarios: ScenarioSet,
}

impl DayFixture {
    pub fn new(day_offset: i64) -> Self {
        let cfg = RunConfig::default();
        let spec = cfg.synth_spec();
        let data = synthesize(&spec, &cfg.location, &cfg.plant).expect("bundled dataset");
        let date = spec.eval_start + chrono::Duration::days(day_offset);
        let history = HistoryModel::from_dataset(&data, date, &cfg.location, &cfg.plant, &cfg.stochastic)
            .expect("history");
        let fc = forecast(
            &cfg.forecast,
            &data,
            date,
            &history.gen_stats,
            &history.dem_stats,
            &cfg.location,
            cfg.seed,
        )
        .expect("forecast");
        let (gen_total, dem_total) = history
            .total_for_day(&fc, date.ordinal(), cfg.stochastic.lambda)
            .expect("matrices");
        let scenarios = Self::draw(&cfg, date, &gen_total, &dem_total, 0);
        Self {
            tariffs: data.tariff(date).expect("tariff"),
            cfg,
            data,
            date,
            history,
            forecast: fc,
            gen_total,
            dem_total,
            scenarios,
        }
    }

    fn draw(cfg: &RunConfig, date: NaiveDate, g: &ProbabilityMatrix, d: &ProbabilityMatrix, seed: u64) -> ScenarioSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        scenarios_from_totals(g, d, &cfg.stochastic, &cfg.location, date.ordinal(), &mut rng).expect("scenarios")
    }

    /// The kept scenarios truncated to the first `n`, renormalised.
    pub fn first_scenarios(&self, n: usize) -> ScenarioSet {
        let mut set = self.scenarios.clone();
        set.scenarios.truncate(n.max(1));
        let total: f64 = set.probs().iter().sum();
        for s in &mut set.scenarios {
            s.prob /= total;
        }
        if set.len() == 1 {
            set.scenarios[0].prob = 1.0;
        }
        set
    }
}
