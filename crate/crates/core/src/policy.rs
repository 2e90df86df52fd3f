//! Benchmark decision policies.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispatch::{plan_deterministic, solve_day, DaySchedule};
use crate::error::{Error, Result};
use crate::flows::Flows;
use crate::forecast::{day_seed, DayAheadForecast, PURPOSE_SCENARIOS};
use crate::milp::SolverOptions;
use crate::pipeline::{scenarios_from_totals, HistoryModel, StochasticSettings};
use crate::plant::{PlantConfig, TariffDay};
use crate::prob::ProbabilityMatrix;
use crate::scenario::{Profile, ScenarioSet};
use crate::solar::GeoLocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    RuleBased,
    Deterministic,
    IdealForecast,
    StochasticProposed,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::RuleBased,
        PolicyKind::Deterministic,
        PolicyKind::IdealForecast,
        PolicyKind::StochasticProposed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::RuleBased => "rule-based",
            PolicyKind::Deterministic => "deterministic",
            PolicyKind::IdealForecast => "ideal-forecast",
            PolicyKind::StochasticProposed => "stochastic",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown policy {s:?}; expected one of rule-based, deterministic, ideal-forecast, stochastic"
                ))
            })
    }
}

/// Realised flows of one hour.
pub type HourDecision = Flows;

/// PV to load first, surplus to the battery then the grid (curtailing what
/// the converter cannot take), deficit from the battery then the grid
/// (shedding what it cannot supply). Never charges from the grid.
pub fn rule_based_step(pv: f64, load: f64, soc: f64, plant: &PlantConfig) -> HourDecision {
    let pv = pv.max(0.0);
    let load = load.max(0.0);
    let mut f = Flows {
        pv_ld: pv.min(load),
        ..Flows::default()
    };
    let surplus = pv - f.pv_ld;
    let deficit = load - f.pv_ld;
    if surplus > 0.0 {
        f.pv_es = surplus.min(plant.p_es_max).min(plant.charge_headroom(soc));
        let rest = surplus - f.pv_es;
        f.pv_gr = rest.min(plant.p_gr_max);
        f.curtail = rest - f.pv_gr;
    } else if deficit > 0.0 {
        f.es_ld = deficit.min(plant.p_es_max).min(plant.discharge_available(soc));
        let rest = deficit - f.es_ld;
        f.gr_ld = rest.min(plant.p_gr_max);
        f.shed = rest - f.gr_ld;
    }
    f
}

/// Where the stochastic policy gets its total matrices.
#[derive(Debug, Clone, Copy)]
pub enum StochasticInputs<'a> {
    /// Forecast and history combined through the full pipeline.
    Pipeline(&'a HistoryModel),
    /// Precomputed total matrices.
    Totals {
        gen: &'a ProbabilityMatrix,
        dem: &'a ProbabilityMatrix,
    },
}

/// Inputs for planning one day.
#[derive(Debug, Clone, Copy)]
pub struct DayContext<'a> {
    pub date: NaiveDate,
    pub forecast: &'a DayAheadForecast,
    pub actual_gen: &'a Profile,
    pub actual_dem: &'a Profile,
    pub tariffs: &'a TariffDay,
    pub plant: &'a PlantConfig,
    pub loc: &'a GeoLocation,
    pub soc0: f64,
    pub settings: &'a StochasticSettings,
    pub solver: &'a SolverOptions,
    pub stochastic: Option<StochasticInputs<'a>>,
    pub seed: u64,
}

/// Scenario set the stochastic policy plans against.
pub fn stochastic_scenarios(ctx: &DayContext<'_>) -> Result<ScenarioSet> {
    let doy = ctx.date.ordinal();
    let inputs = ctx
        .stochastic
        .ok_or_else(|| Error::invalid("stochastic policy needs history or total matrices"))?;
    let owned;
    let (gen, dem) = match inputs {
        StochasticInputs::Pipeline(hm) => {
            owned = hm.total_for_day(ctx.forecast, doy, ctx.settings.lambda)?;
            (&owned.0, &owned.1)
        }
        StochasticInputs::Totals { gen, dem } => (gen, dem),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(day_seed(ctx.seed, ctx.date, PURPOSE_SCENARIOS));
    scenarios_from_totals(gen, dem, ctx.settings, ctx.loc, doy, &mut rng)
}

/// Day-ahead plan for a policy; `None` for the rule-based policy, which
/// decides hour by hour.
pub fn make_day_plan(kind: PolicyKind, ctx: &DayContext<'_>) -> Result<Option<DaySchedule>> {
    let plan = match kind {
        PolicyKind::RuleBased => return Ok(None),
        PolicyKind::IdealForecast => plan_deterministic(
            ctx.actual_gen,
            ctx.actual_dem,
            ctx.tariffs,
            ctx.plant,
            ctx.soc0,
            ctx.solver,
        )?,
        PolicyKind::Deterministic => plan_deterministic(
            &ctx.forecast.gen,
            &ctx.forecast.dem,
            ctx.tariffs,
            ctx.plant,
            ctx.soc0,
            ctx.solver,
        )?,
        PolicyKind::StochasticProposed => {
            let set = stochastic_scenarios(ctx)?;
            solve_day(&set, ctx.tariffs, ctx.plant, ctx.soc0, ctx.solver)?
        }
    };
    Ok(Some(plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{BinAxis, MatrixKind, Quantity, RangeSpec};

    fn plant() -> PlantConfig {
        PlantConfig::default()
    }

    fn check(f: &Flows, pv: f64, load: f64) {
        assert!(f.as_array().iter().all(|v| *v >= 0.0));
        assert!(f.balance_residual(pv, load).abs() < 1e-12);
        assert!(f.import() == 0.0 || f.export() == 0.0);
        assert!(f.charge() == 0.0 || f.discharge() == 0.0);
        assert_eq!(f.gr_es, 0.0);
    }

    #[test]
    fn balanced_hour_uses_pv_only() {
        let f = rule_based_step(2.0, 2.0, 50.0, &plant());
        assert_eq!(
            f,
            Flows {
                pv_ld: 2.0,
                ..Flows::default()
            }
        );
    }

    #[test]
    fn empty_battery_imports() {
        let p = plant();
        let f = rule_based_step(0.0, 1.0, p.soc_min, &p);
        assert_eq!(f.gr_ld, 1.0);
        assert_eq!(f.es_ld, 0.0);
        check(&f, 0.0, 1.0);
    }

    #[test]
    fn full_battery_exports_then_curtails() {
        let p = plant();
        let f = rule_based_step(8.0, 1.0, p.soc_max, &p);
        assert_eq!(f.pv_ld, 1.0);
        assert_eq!(f.pv_es, 0.0);
        assert_eq!(f.pv_gr, 5.0);
        assert!((f.curtail - 2.0).abs() < 1e-12);
        check(&f, 8.0, 1.0);
    }

    #[test]
    fn surplus_charges_within_headroom() {
        let p = plant();
        let soc = p.soc_max - 5.0;
        let f = rule_based_step(6.0, 1.0, soc, &p);
        let head = 5.0 * p.e_cap / (100.0 * p.eta_c * p.delta_t);
        assert!((f.pv_es - head).abs() < 1e-12);
        assert!(p.next_soc(soc, f.charge(), 0.0) <= p.soc_max + 1e-12);
        check(&f, 6.0, 1.0);
    }

    #[test]
    fn deficit_drains_battery_then_sheds() {
        let p = plant();
        let f = rule_based_step(0.0, 12.0, p.soc_max, &p);
        assert_eq!(f.es_ld, 5.0);
        assert_eq!(f.gr_ld, 5.0);
        assert_eq!(f.shed, 2.0);
        check(&f, 0.0, 12.0);
        let soc = p.soc_min + 1.0;
        let f = rule_based_step(0.0, 3.0, soc, &p);
        assert!((p.next_soc(soc, 0.0, f.discharge()) - p.soc_min).abs() < 1e-9);
    }

    #[test]
    fn names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn point_masses_collapse_to_deterministic_plan() {
        let range = RangeSpec::new(0.0, 10.0, 100).unwrap();
        let axis = BinAxis::Uniform(range);
        let gen_bins: [usize; 24] = std::array::from_fn(|h| if (9..16).contains(&h) { 30 } else { 0 });
        let dem_bins = [15usize; 24];
        let gen = ProbabilityMatrix::point_masses(gen_bins, MatrixKind::Total, Quantity::Generation, axis.clone()).unwrap();
        let dem = ProbabilityMatrix::point_masses(dem_bins, MatrixKind::Total, Quantity::Demand, axis.clone()).unwrap();
        let loc = GeoLocation::new(51.5, -0.1).unwrap();
        let g: Profile = std::array::from_fn(|h| {
            if crate::solar::solar_position(&loc, 152, h as u32).unwrap().is_night() {
                0.0
            } else {
                axis.midpoint(h, gen_bins[h])
            }
        });
        let d: Profile = std::array::from_fn(|h| axis.midpoint(h, dem_bins[h]));
        let fc = DayAheadForecast { gen: g, dem: d };
        let t = crate::data::synthetic_tariff();
        let p = plant();
        let ctx = DayContext {
            date: NaiveDate::from_ymd_opt(2023, 6, 1).unwrap(),
            forecast: &fc,
            actual_gen: &g,
            actual_dem: &d,
            tariffs: &t,
            plant: &p,
            loc: &loc,
            soc0: 50.0,
            settings: &StochasticSettings::default(),
            solver: &SolverOptions::default(),
            stochastic: Some(StochasticInputs::Totals { gen: &gen, dem: &dem }),
            seed: 7,
        };
        assert!(make_day_plan(PolicyKind::RuleBased, &ctx).unwrap().is_none());
        let s = make_day_plan(PolicyKind::StochasticProposed, &ctx).unwrap().unwrap();
        let det = make_day_plan(PolicyKind::Deterministic, &ctx).unwrap().unwrap();
        let ideal = make_day_plan(PolicyKind::IdealForecast, &ctx).unwrap().unwrap();
        assert_eq!(s.scenarios.len(), 1);
        assert_eq!(s, det);
        assert_eq!(det, ideal);
    }
}
