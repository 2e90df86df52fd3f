use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bems_core::policy::{stochastic_scenarios, DayContext, StochasticInputs};
use bems_core::scenario::Profile;
use bems_core::sim::write_metrics_csv;
use bems_core::{
    forecast, ingest, make_day_plan, run_horizon, synthesize, Dataset, DayAheadForecast, Error, HistoryModel,
    PolicyKind, Result, RunConfig, SimRun, TariffDay,
};
use chrono::{Datelike, Duration, NaiveDate};
use log::info;

use crate::{svg, Cli, Command, DateRange};

/// Progress output for one invocation; errors always go to stderr.
struct Console {
    quiet: bool,
}

impl Console {
    fn say(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn write_with(&self, path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = create(path)?;
        f(&mut w)?;
        w.flush()?;
        self.say(format_args!("wrote {}", path.display()));
        Ok(())
    }
}

/// Configuration plus the dataset it applies to.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub cfg: RunConfig,
    pub data: Dataset,
}

impl Inputs {
    /// Evaluation window of the configuration.
    pub fn default_range(&self) -> (NaiveDate, NaiveDate) {
        let s = self.cfg.synth_spec();
        (s.eval_start, s.end())
    }

    fn range(&self, r: &DateRange) -> Result<(NaiveDate, NaiveDate)> {
        let (from, to) = self.default_range();
        let from = r.from.unwrap_or(from);
        let to = r.to.unwrap_or(if r.from.is_some() { from.max(to) } else { to });
        if to < from {
            return Err(Error::InvalidInput(format!("--to {to} is before --from {from}")));
        }
        Ok((from, to))
    }

    fn history(&self, date: NaiveDate) -> Result<HistoryModel> {
        let c = &self.cfg;
        HistoryModel::from_dataset(&self.data, date, &c.location, &c.plant, &c.stochastic)
    }
}

/// Loads the config (with the seed override) and the dataset named on the
/// command line, or synthesises the bundled one.
pub fn load_inputs(config: Option<&Path>, seed: Option<u64>, data: &[PathBuf]) -> Result<Inputs> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let data = if data.is_empty() {
        synthesize(&cfg.synth_spec(), &cfg.location, &cfg.plant)?
    } else {
        ingest(data)?
    };
    Ok(Inputs { cfg, data })
}

/// Everything needed to plan one day.
struct DayInputs {
    date: NaiveDate,
    history: HistoryModel,
    forecast: DayAheadForecast,
    actual_gen: Profile,
    actual_dem: Profile,
    tariffs: TariffDay,
}

impl DayInputs {
    fn load(inp: &Inputs, date: NaiveDate) -> Result<Self> {
        let c = &inp.cfg;
        let history = inp.history(date)?;
        let fc = forecast(&c.forecast, &inp.data, date, &history.gen_stats, &history.dem_stats, &c.location, c.seed)?;
        let (actual_gen, actual_dem) = inp.data.actuals(date)?;
        Ok(Self {
            date,
            tariffs: inp.data.tariff(date)?,
            history,
            forecast: fc,
            actual_gen,
            actual_dem,
        })
    }

    fn context<'a>(&'a self, cfg: &'a RunConfig, soc0: f64) -> DayContext<'a> {
        DayContext {
            date: self.date,
            forecast: &self.forecast,
            actual_gen: &self.actual_gen,
            actual_dem: &self.actual_dem,
            tariffs: &self.tariffs,
            plant: &cfg.plant,
            loc: &cfg.location,
            soc0,
            settings: &cfg.stochastic,
            solver: &cfg.solver,
            stochastic: Some(StochasticInputs::Pipeline(&self.history)),
            seed: cfg.seed,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub(crate) fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let inp = load_inputs(g.config.as_deref(), g.seed, &g.data)?;
    let out = &g.out;
    let con = Console { quiet: g.quiet };
    let day_or_start = |d: Option<NaiveDate>| d.unwrap_or(inp.default_range().0);
    match &cli.command {
        Command::SynthData { output } => {
            let path = output.clone().unwrap_or_else(|| out.join("dataset.csv"));
            con.write_with(&path, |w| inp.data.write_csv(w))
        }
        Command::BuildProbs { date } => build_probs(&con, &inp, day_or_start(*date), out),
        Command::GenScenarios { date } => gen_scenarios(&con, &inp, day_or_start(*date), out),
        Command::PlanDay { date, policy, soc0 } => plan_day(&con, &inp, day_or_start(*date), *policy, *soc0, out),
        Command::Simulate { range, policy } => {
            let (from, to) = inp.range(range)?;
            simulate(&con, &inp, from, to, *policy, out)
        }
        Command::Report { range } => {
            let (from, to) = inp.range(range)?;
            report(&con, &inp, from, to, out)
        }
    }
}

fn build_probs(con: &Console, inp: &Inputs, date: NaiveDate, out: &Path) -> Result<()> {
    let day = DayInputs::load(inp, date)?;
    let doy = date.ordinal();
    let (gf, df) = day.history.forecast_for_day(&day.forecast, doy)?;
    let (gh, dh) = day.history.historical_for_day(doy)?;
    let (gt, dt) = day.history.total_for_day(&day.forecast, doy, inp.cfg.stochastic.lambda)?;
    for (name, m) in [
        ("gen_forecast", &gf),
        ("gen_historical", &gh),
        ("gen_total", &gt),
        ("dem_forecast", &df),
        ("dem_historical", &dh),
        ("dem_total", &dt),
    ] {
        con.write_with(&out.join(format!("probs_{date}_{name}.csv")), |w| m.write_csv(w))?;
    }
    let doc = svg::matrices(&format!("Probability matrices {date}"), &gt, &dt);
    con.write_with(&out.join(format!("probs_{date}.svg")), |w| Ok(w.write_all(doc.as_bytes())?))
}

fn gen_scenarios(con: &Console, inp: &Inputs, date: NaiveDate, out: &Path) -> Result<()> {
    let day = DayInputs::load(inp, date)?;
    let set = stochastic_scenarios(&day.context(&inp.cfg, inp.cfg.plant.soc_init))?;
    info!("{date}: {} scenarios after merging", set.len());
    con.write_with(&out.join(format!("scenarios_{date}.csv")), |w| set.write_csv(w))?;
    let doc = svg::scenarios(&format!("Scenarios {date}"), &set, &day.actual_gen, &day.actual_dem);
    con.write_with(&out.join(format!("scenarios_{date}.svg")), |w| Ok(w.write_all(doc.as_bytes())?))
}

fn plan_day(con: &Console, inp: &Inputs, date: NaiveDate, policy: PolicyKind, soc0: Option<f64>, out: &Path) -> Result<()> {
    let plant = &inp.cfg.plant;
    let soc0 = soc0.unwrap_or(plant.soc_init);
    if !(plant.soc_min..=plant.soc_max).contains(&soc0) {
        return Err(Error::InvalidInput(format!(
            "--soc0 {soc0} outside [{}, {}]",
            plant.soc_min, plant.soc_max
        )));
    }
    let day = DayInputs::load(inp, date)?;
    let t0 = Instant::now();
    match make_day_plan(policy, &day.context(&inp.cfg, soc0))? {
        Some(plan) => {
            info!(
                "{policy} {date}: expected cost {:.4} EUR, {} nodes, {:.2?}",
                plan.expected_cost,
                plan.nodes_explored,
                t0.elapsed()
            );
            con.say(format_args!(
                "expected cost {:.6} EUR over {} scenario(s)",
                plan.expected_cost,
                plan.scenarios.len()
            ));
            con.write_with(&out.join(format!("plan_{date}_{policy}.csv")), |w| plan.write_csv(w))
        }
        None => {
            // No day-ahead plan exists; show what the rule does over the day.
            con.say(format_args!("{policy} decides hour by hour; writing its simulated day instead"));
            let cfg = RunConfig {
                plant: bems_core::PlantConfig { soc_init: soc0, ..*plant },
                ..inp.cfg
            };
            let run = run_horizon(&inp.data, policy, &cfg, date, date, Some(&day.history))?;
            con.write_with(&out.join(format!("plan_{date}_{policy}.csv")), |w| run.write_hourly_csv(w))
        }
    }
}

fn metrics_table(rows: &[(PolicyKind, bems_core::MetricsReport)]) -> String {
    let mut t = format!("{:<16}{:>10}{:>12}{:>10}{:>12}{:>12}", "policy", "SFR", "AEB", "ABCL", "TIEG", "TEEG");
    for (p, m) in rows {
        t += &format!(
            "\n{:<16}{:>10.4}{:>12.2}{:>10.2}{:>12.2}{:>12.2}",
            p.name(),
            m.sfr,
            m.aeb,
            m.abcl,
            m.tieg,
            m.teeg
        );
    }
    t
}

fn simulate(con: &Console, inp: &Inputs, from: NaiveDate, to: NaiveDate, policy: PolicyKind, out: &Path) -> Result<()> {
    let t0 = Instant::now();
    let run = run_horizon(&inp.data, policy, &inp.cfg, from, to, None)?;
    info!("{policy} {from}..{to} simulated in {:.2?}", t0.elapsed());
    let stem = format!("{policy}_{from}_{to}");
    con.write_with(&out.join(format!("sim_{stem}.csv")), |w| run.write_hourly_csv(w))?;
    let rows = [(policy, run.metrics)];
    con.write_with(&out.join(format!("metrics_{stem}.csv")), |w| write_metrics_csv(&rows, w))?;
    con.say(metrics_table(&rows));
    Ok(())
}

/// Runs all four policies on separate threads over shared inputs.
pub fn run_all(inp: &Inputs, from: NaiveDate, to: NaiveDate) -> Result<Vec<SimRun>> {
    let history = inp.history(from)?;
    std::thread::scope(|s| {
        let handles: Vec<_> = PolicyKind::ALL
            .into_iter()
            .map(|p| {
                let history = &history;
                s.spawn(move || run_horizon(&inp.data, p, &inp.cfg, from, to, Some(history)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| Error::Internal("simulation thread panicked".into()))?)
            .collect()
    })
}

fn report(con: &Console, inp: &Inputs, from: NaiveDate, to: NaiveDate, out: &Path) -> Result<()> {
    let t0 = Instant::now();
    let runs = run_all(inp, from, to)?;
    info!("report {from}..{to} in {:.2?}", t0.elapsed());
    for run in &runs {
        con.write_with(&out.join(format!("report_{}.csv", run.policy)), |w| run.write_hourly_csv(w))?;
    }
    let rows: Vec<_> = runs.iter().map(|r| (r.policy, r.metrics)).collect();
    con.write_with(&out.join("report.csv"), |w| write_metrics_csv(&rows, w))?;
    let days = (to - from + Duration::days(1)).num_days();
    con.say(format_args!("{days} day(s) from {from} to {to}"));
    con.say(metrics_table(&rows));
    Ok(())
}
