//! Forecast-driven scenario generation and stochastic battery dispatch for a
//! building with rooftop PV, a battery and a grid connection.
//!
//! The pieces, roughly in pipeline order:
//!
//! * [`solar`]: sun position, clear-sky PV and the historical PV envelope.
//! * [`prob`]: per-hour probability matrices from history and forecasts.
//! * [`scenario`]: stratified sampling, scoring and selection of scenarios.
//! * [`milp`]: a small bounded simplex with branch and bound.
//! * [`dispatch`]: the multi-scenario day-ahead dispatch model.
//! * [`policy`], [`sim`]: benchmark policies and the closed-loop simulator.
//! * [`data`], [`forecast`], [`config`]: datasets, forecast providers and run settings.

pub mod config;
pub mod data;
pub mod dispatch;
pub mod error;
pub mod flows;
pub mod forecast;
pub mod milp;
pub mod pipeline;
pub mod plant;
pub mod policy;
pub mod prob;
pub mod scenario;
pub mod series;
pub mod sim;
pub mod solar;

pub use config::RunConfig;
pub use data::{ingest, synthesize, Dataset, Record, SynthSpec};
pub use dispatch::{build_model, plan_deterministic, solve_day, DaySchedule};
pub use error::{Error, Result};
pub use flows::Flows;
pub use forecast::{forecast, DayAheadForecast, ForecastProvider};
pub use milp::{solve_lp, solve_milp, LinearProgram, LpSolution, Relation, SolveStatus, SolverOptions};
pub use pipeline::{HistoryModel, StochasticSettings};
pub use plant::{PlantConfig, TariffDay};
pub use policy::{make_day_plan, rule_based_step, PolicyKind};
pub use prob::{BinAxis, HourlyStats, MatrixKind, ProbabilityMatrix, Quantity, RangeSpec};
pub use scenario::{SamplingMode, Scenario, ScenarioSet};
pub use series::HourlySeries;
pub use sim::{execute_hour, run_horizon, MetricsReport, SimRun, SimState};
pub use solar::{GeoLocation, PvEnvelope};
