//! Multi-scenario day-ahead battery dispatch.
//!
//! Each scenario gets its own recourse flows, SoC trajectory and mutual
//! exclusion binaries. The battery's net power `u[h]` is shared by every
//! scenario, so the plan cannot depend on which scenario materialises.

use std::io::Write;

use log::warn;

use crate::error::{Error, Result};
use crate::flows::Flows;
use crate::milp::{solve_milp, LinearProgram, Relation, SolveStatus, SolverOptions};
use crate::plant::{PlantConfig, TariffDay};
use crate::scenario::ScenarioSet;
use crate::series::HOURS_PER_DAY;

const PROB_SUM_TOL: f64 = 1e-6;
const SNAP: f64 = 1e-10;

/// Offsets of the per-(scenario, hour) variables inside a block.
mod slot {
    pub const PV_LD: usize = 0;
    pub const PV_ES: usize = 1;
    pub const PV_GR: usize = 2;
    pub const GR_LD: usize = 3;
    pub const GR_ES: usize = 4;
    pub const ES_LD: usize = 5;
    pub const ES_GR: usize = 6;
    pub const CURTAIL: usize = 7;
    pub const SHED: usize = 8;
    pub const SOC: usize = 9;
    pub const B_IMP: usize = 10;
    pub const B_EXP: usize = 11;
    pub const B_CH: usize = 12;
    pub const B_DIS: usize = 13;
    pub const LEN: usize = 14;
}

/// The LP together with the layout needed to read a solution back.
#[derive(Debug, Clone)]
pub struct DispatchModel {
    pub lp: LinearProgram,
    pub scenarios: usize,
    pub hours: usize,
    pub probs: Vec<f64>,
}

impl DispatchModel {
    pub fn u_var(&self, h: usize) -> usize {
        h
    }

    fn block(&self, i: usize, h: usize) -> usize {
        self.hours + (i * self.hours + h) * slot::LEN
    }

    pub fn soc_var(&self, i: usize, h: usize) -> usize {
        self.block(i, h) + slot::SOC
    }

    pub fn flow_vars(&self, i: usize, h: usize) -> [usize; 9] {
        let b = self.block(i, h);
        std::array::from_fn(|k| b + k)
    }

    pub fn binary_vars(&self, i: usize, h: usize) -> [usize; 4] {
        let b = self.block(i, h) + slot::B_IMP;
        std::array::from_fn(|k| b + k)
    }
}

/// Planned operation under one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPlan {
    pub prob: f64,
    pub flows: Vec<Flows>,
    /// SoC at the end of each hour, %.
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaySchedule {
    /// Battery net power per hour, kW, positive = charging.
    pub u: Vec<f64>,
    pub scenarios: Vec<ScenarioPlan>,
    /// Probability-weighted energy cost, €, excluding shed penalty and
    /// throughput cost.
    pub expected_cost: f64,
    pub status: SolveStatus,
    pub nodes_explored: usize,
}

impl DaySchedule {
    pub fn hours(&self) -> usize {
        self.u.len()
    }

    /// Probability-weighted flows for hour `h`.
    pub fn expected_flows(&self, h: usize) -> Flows {
        let mut acc = [0.0; 9];
        for s in &self.scenarios {
            for (a, v) in acc.iter_mut().zip(s.flows[h].as_array()) {
                *a += s.prob * v;
            }
        }
        Flows::from_array(acc)
    }

    pub fn expected_soc(&self, h: usize) -> f64 {
        self.scenarios.iter().map(|s| s.prob * s.soc[h]).sum()
    }

    /// CSV with `hour, u_kw`, expected flows and expected SoC.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["hour".to_string(), "u_kw".to_string()];
        header.extend(Flows::NAMES.iter().map(|n| format!("{n}_kw")));
        header.push("soc_pct".into());
        w.write_record(&header)?;
        for h in 0..self.hours() {
            let mut rec = vec![h.to_string(), fmt(self.u[h])];
            rec.extend(self.expected_flows(h).as_array().iter().map(|v| fmt(*v)));
            rec.push(fmt(self.expected_soc(h)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest text that parses back to the same value; `-0` prints as `0`.
pub(crate) fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

/// Builds the 24-hour dispatch model.
pub fn build_model(scenarios: &ScenarioSet, tariffs: &TariffDay, plant: &PlantConfig, soc0: f64) -> Result<DispatchModel> {
    build_model_hours(scenarios, tariffs, plant, soc0, HOURS_PER_DAY)
}

/// Builds the dispatch model over the first `hours` hours of the scenarios.
pub fn build_model_hours(
    scenarios: &ScenarioSet,
    tariffs: &TariffDay,
    plant: &PlantConfig,
    soc0: f64,
    hours: usize,
) -> Result<DispatchModel> {
    plant.validate()?;
    tariffs.validate()?;
    if scenarios.is_empty() {
        return Err(Error::invalid("scenario set is empty"));
    }
    if hours == 0 || hours > HOURS_PER_DAY {
        return Err(Error::invalid(format!("horizon must be 1..=24 hours, got {hours}")));
    }
    let total: f64 = scenarios.scenarios.iter().map(|s| s.prob).sum();
    if (total - 1.0).abs() > PROB_SUM_TOL || scenarios.scenarios.iter().any(|s| s.prob.is_nan() || s.prob < 0.0) {
        return Err(Error::invalid(format!("scenario probabilities sum to {total}, expected 1")));
    }
    for s in &scenarios.scenarios {
        if s.gen.iter().chain(s.dem.iter()).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!("scenario {} has negative or non-finite values", s.id)));
        }
    }
    if !(plant.soc_min - 1e-9..=plant.soc_max + 1e-9).contains(&soc0) {
        return Err(Error::invalid(format!(
            "initial SoC {soc0} outside [{}, {}]",
            plant.soc_min, plant.soc_max
        )));
    }
    let soc0 = soc0.clamp(plant.soc_min, plant.soc_max);

    let n_s = scenarios.len();
    let dt = plant.delta_t;
    let k_c = 100.0 * dt * plant.eta_c / plant.e_cap;
    let k_d = 100.0 * dt / (plant.eta_d * plant.e_cap);
    let m_gr = plant.p_gr_max;
    let m_es = plant.p_es_max;

    let mut lp = LinearProgram::new();
    for h in 0..hours {
        lp.add_var(format!("u_{h}"), -plant.p_es_max, plant.p_es_max, 0.0);
    }
    for (i, sc) in scenarios.scenarios.iter().enumerate() {
        let p = sc.prob;
        for h in 0..hours {
            let (imp, exp) = (tariffs.tou_imp[h], tariffs.tou_exp[h]);
            let tc = p * plant.throughput_cost * dt;
            let costs = [
                0.0,
                tc,
                -p * dt * exp,
                p * dt * imp,
                p * dt * imp + tc,
                tc,
                -p * dt * exp + tc,
                0.0,
                plant.shed_penalty * dt,
            ];
            for (k, c) in costs.iter().enumerate() {
                lp.add_var(format!("{}_{i}_{h}", Flows::NAMES[k]), 0.0, f64::INFINITY, *c);
            }
            lp.add_var(format!("soc_{i}_{h}"), plant.soc_min, plant.soc_max, 0.0);
            for name in ["b_imp", "b_exp", "b_ch", "b_dis"] {
                lp.add_binary(format!("{name}_{i}_{h}"), 0.0);
            }
        }
    }
    let model_layout = DispatchModel {
        lp: LinearProgram::new(),
        scenarios: n_s,
        hours,
        probs: scenarios.probs(),
    };

    for (i, sc) in scenarios.scenarios.iter().enumerate() {
        for h in 0..hours {
            let b = model_layout.block(i, h);
            let v = |k: usize| b + k;
            use slot::*;
            let pv = sc.gen[h].min(plant.p_pv_max);
            let load = sc.dem[h];
            let tag = |n: &str| format!("{n}_{i}_{h}");

            lp.add_constraint(
                tag("pv_cap"),
                vec![(v(PV_LD), 1.0), (v(PV_ES), 1.0), (v(PV_GR), 1.0)],
                Relation::Le,
                plant.p_pv_max,
            );
            lp.add_constraint(tag("grid_cap"), vec![(v(GR_LD), 1.0), (v(GR_ES), 1.0)], Relation::Le, plant.p_gr_max);
            lp.add_constraint(tag("dis_cap"), vec![(v(ES_LD), 1.0), (v(ES_GR), 1.0)], Relation::Le, plant.p_es_max);
            lp.add_constraint(tag("ch_cap"), vec![(v(PV_ES), 1.0), (v(GR_ES), 1.0)], Relation::Le, plant.p_es_max);
            lp.add_constraint(
                tag("pv_bal"),
                vec![(v(PV_LD), 1.0), (v(PV_ES), 1.0), (v(PV_GR), 1.0), (v(CURTAIL), 1.0)],
                Relation::Eq,
                pv,
            );
            lp.add_constraint(
                tag("load_bal"),
                vec![(v(ES_LD), 1.0), (v(GR_LD), 1.0), (v(PV_LD), 1.0), (v(SHED), 1.0)],
                Relation::Eq,
                load,
            );
            let mut soc_terms = vec![
                (v(SOC), 1.0),
                (v(PV_ES), -k_c),
                (v(GR_ES), -k_c),
                (v(ES_LD), k_d),
                (v(ES_GR), k_d),
            ];
            let soc_rhs = if h == 0 {
                soc0
            } else {
                soc_terms.push((model_layout.soc_var(i, h - 1), -1.0));
                0.0
            };
            lp.add_constraint(tag("soc"), soc_terms, Relation::Eq, soc_rhs);
            lp.add_constraint(
                tag("imp_on"),
                vec![(v(GR_LD), 1.0), (v(GR_ES), 1.0), (v(B_IMP), -m_gr)],
                Relation::Le,
                0.0,
            );
            lp.add_constraint(
                tag("exp_on"),
                vec![(v(PV_GR), 1.0), (v(ES_GR), 1.0), (v(B_EXP), -m_gr)],
                Relation::Le,
                0.0,
            );
            lp.add_constraint(tag("imp_xor_exp"), vec![(v(B_IMP), 1.0), (v(B_EXP), 1.0)], Relation::Le, 1.0);
            lp.add_constraint(
                tag("ch_on"),
                vec![(v(PV_ES), 1.0), (v(GR_ES), 1.0), (v(B_CH), -m_es)],
                Relation::Le,
                0.0,
            );
            lp.add_constraint(
                tag("dis_on"),
                vec![(v(ES_LD), 1.0), (v(ES_GR), 1.0), (v(B_DIS), -m_es)],
                Relation::Le,
                0.0,
            );
            lp.add_constraint(tag("ch_xor_dis"), vec![(v(B_CH), 1.0), (v(B_DIS), 1.0)], Relation::Le, 1.0);
            lp.add_constraint(
                tag("nonanticipative"),
                vec![
                    (v(PV_ES), 1.0),
                    (v(GR_ES), 1.0),
                    (v(ES_LD), -1.0),
                    (v(ES_GR), -1.0),
                    (model_layout.u_var(h), -1.0),
                ],
                Relation::Eq,
                0.0,
            );
        }
        if plant.terminal_soc {
            lp.add_constraint(
                format!("terminal_{i}"),
                vec![(model_layout.soc_var(i, hours - 1), 1.0)],
                Relation::Ge,
                plant.soc_init.max(plant.soc_min),
            );
        }
    }
    Ok(DispatchModel { lp, ..model_layout })
}

/// Solves the day-ahead model and extracts the schedule.
pub fn solve_day(
    scenarios: &ScenarioSet,
    tariffs: &TariffDay,
    plant: &PlantConfig,
    soc0: f64,
    opts: &SolverOptions,
) -> Result<DaySchedule> {
    solve_day_hours(scenarios, tariffs, plant, soc0, opts, HOURS_PER_DAY)
}

pub fn solve_day_hours(
    scenarios: &ScenarioSet,
    tariffs: &TariffDay,
    plant: &PlantConfig,
    soc0: f64,
    opts: &SolverOptions,
    hours: usize,
) -> Result<DaySchedule> {
    let model = build_model_hours(scenarios, tariffs, plant, soc0, hours)?;
    let sol = solve_milp(&model.lp, opts)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::NodeLimit if sol.has_solution() => {
            warn!("dispatch stopped at the node limit; using the incumbent");
        }
        SolveStatus::NodeLimit => return Err(Error::SolverLimit),
        other => {
            return Err(Error::Internal(format!("dispatch model reported {other:?}")));
        }
    }
    let x = &sol.x;
    let snap = |v: f64| if v.abs() < SNAP { 0.0 } else { v };
    let u: Vec<f64> = (0..hours).map(|h| snap(x[model.u_var(h)])).collect();
    let mut plans = Vec::with_capacity(model.scenarios);
    let mut expected_cost = 0.0;
    for i in 0..model.scenarios {
        let mut flows = Vec::with_capacity(hours);
        let mut soc = Vec::with_capacity(hours);
        for h in 0..hours {
            let f = Flows::from_array(model.flow_vars(i, h).map(|j| snap(x[j])));
            expected_cost += model.probs[i] * f.cost(tariffs.tou_imp[h], tariffs.tou_exp[h], plant.delta_t);
            flows.push(f);
            soc.push(x[model.soc_var(i, h)]);
        }
        plans.push(ScenarioPlan {
            prob: model.probs[i],
            flows,
            soc,
        });
    }
    Ok(DaySchedule {
        u,
        scenarios: plans,
        expected_cost,
        status: sol.status,
        nodes_explored: sol.nodes_explored,
    })
}

/// Plans against a single fixed profile pair.
pub fn plan_deterministic(
    gen: &[f64; HOURS_PER_DAY],
    dem: &[f64; HOURS_PER_DAY],
    tariffs: &TariffDay,
    plant: &PlantConfig,
    soc0: f64,
    opts: &SolverOptions,
) -> Result<DaySchedule> {
    solve_day(&ScenarioSet::single(*gen, *dem), tariffs, plant, soc0, opts)
}
