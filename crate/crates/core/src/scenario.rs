//! Paired PV/demand scenarios drawn by stratified inverse-CDF sampling from
//! total probability matrices, scored and reduced to the most probable few.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{MatrixKind, ProbabilityMatrix, Quantity, COLUMN_SUM_TOL};
use crate::series::HOURS_PER_DAY;
use crate::solar::{solar_position, GeoLocation};

pub type Profile = [f64; HOURS_PER_DAY];

/// Cumulative distribution of one hour's column.
#[derive(Debug, Clone, PartialEq)]
pub struct HourCdf {
    /// `R + 1` nondecreasing values, `edges[0] = 0`, `edges[R] = 1`.
    pub edges: Vec<f64>,
    /// Bin representative values (midpoints), `R` entries.
    pub values: Vec<f64>,
}

pub fn build_cdf(column: &[f64], values: Vec<f64>) -> Result<HourCdf> {
    if column.is_empty() || column.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probabilities for {} bin values",
            column.len(),
            values.len()
        )));
    }
    if column.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::invalid("column has a negative or non-finite entry"));
    }
    let total: f64 = column.iter().sum();
    if (total - 1.0).abs() > COLUMN_SUM_TOL {
        return Err(Error::invalid(format!("column sums to {total}, not 1")));
    }
    let mut edges = Vec::with_capacity(column.len() + 1);
    edges.push(0.0);
    let mut acc = 0.0;
    for p in column {
        acc += p;
        edges.push(acc.min(1.0));
    }
    *edges.last_mut().unwrap() = 1.0;
    Ok(HourCdf { edges, values })
}

impl HourCdf {
    /// Bin chosen for a uniform draw `u ∈ [0, 1)`: the first bin whose upper
    /// edge exceeds `u`, so zero-probability bins are never returned.
    pub fn invert(&self, u: f64) -> usize {
        let r = self.values.len();
        self.edges[1..].partition_point(|&e| e <= u).min(r - 1)
    }
}

/// One draw per equal-probability stratum; output is ordered by stratum.
pub fn sample_stratified<R: Rng + ?Sized>(cdf: &HourCdf, strata: usize, rng: &mut R) -> Vec<f64> {
    (0..strata)
        .map(|s| {
            let u = (s as f64 + rng.random::<f64>()) / strata as f64;
            cdf.values[cdf.invert(u)]
        })
        .collect()
}

/// How strata are assigned to scenarios across hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Scenario `s` takes stratum `s` at every hour (percentile trajectories).
    #[default]
    Coherent,
    /// Strata are independently permuted per hour and per quantity.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Index in the originally generated set.
    pub id: usize,
    pub gen: Profile,
    pub dem: Profile,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob).collect()
    }

    /// A single scenario with probability one.
    pub fn single(gen: Profile, dem: Profile) -> Self {
        Self {
            scenarios: vec![Scenario {
                id: 0,
                gen,
                dem,
                prob: 1.0,
            }],
        }
    }

    /// Folds bit-identical scenarios into the first occurrence, summing
    /// probabilities.
    pub fn merge_duplicates(&self) -> Self {
        let mut out: Vec<Scenario> = Vec::with_capacity(self.len());
        for s in &self.scenarios {
            match out.iter_mut().find(|o| o.gen == s.gen && o.dem == s.dem) {
                Some(o) => o.prob += s.prob,
                None => out.push(s.clone()),
            }
        }
        Self { scenarios: out }
    }

    /// CSV with columns `hour, scenario_id, gen_kw, dem_kw, scenario_prob`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["hour", "scenario_id", "gen_kw", "dem_kw", "scenario_prob"])?;
        for s in &self.scenarios {
            for h in 0..HOURS_PER_DAY {
                w.write_record([
                    h.to_string(),
                    s.id.to_string(),
                    s.gen[h].to_string(),
                    s.dem[h].to_string(),
                    s.prob.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut set = ScenarioSet::default();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |msg: &str| Error::Schema {
                file: "scenarios".into(),
                row: i + 2,
                message: msg.to_string(),
            };
            if rec.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let hour: usize = rec[0].parse().map_err(|_| bad("bad hour"))?;
            let id: usize = rec[1].parse().map_err(|_| bad("bad scenario id"))?;
            let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad("bad number"));
            let (g, d, p) = (num(2)?, num(3)?, num(4)?);
            if hour >= HOURS_PER_DAY {
                return Err(bad("hour out of range"));
            }
            if hour == 0 {
                set.scenarios.push(Scenario {
                    id,
                    gen: [0.0; HOURS_PER_DAY],
                    dem: [0.0; HOURS_PER_DAY],
                    prob: p,
                });
            }
            let s = set
                .scenarios
                .last_mut()
                .filter(|s| s.id == id)
                .ok_or_else(|| bad("rows must be grouped by scenario starting at hour 0"))?;
            s.gen[hour] = g;
            s.dem[hour] = d;
        }
        Ok(set)
    }
}

fn hour_cdfs(m: &ProbabilityMatrix) -> Result<Vec<HourCdf>> {
    (0..HOURS_PER_DAY)
        .map(|h| {
            let values = (0..m.bins()).map(|k| m.axis.midpoint(h, k)).collect();
            build_cdf(m.column(h), values)
        })
        .collect()
}

/// Draws `count` scenarios. The draw order is fixed (hour by hour, generation
/// then demand) so a seeded generator reproduces the set bit for bit.
/// Probabilities start uniform; see [`score`].
pub fn generate<R: Rng + ?Sized>(
    gen: &ProbabilityMatrix,
    dem: &ProbabilityMatrix,
    count: usize,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<ScenarioSet> {
    if count == 0 {
        return Err(Error::invalid("need at least one scenario"));
    }
    if gen.kind != MatrixKind::Total || dem.kind != MatrixKind::Total {
        return Err(Error::invalid("scenarios are drawn from total matrices"));
    }
    if gen.quantity != Quantity::Generation || dem.quantity != Quantity::Demand {
        return Err(Error::invalid("expected a generation and a demand matrix"));
    }
    let (gcdf, dcdf) = (hour_cdfs(gen)?, hour_cdfs(dem)?);
    let mut scenarios: Vec<Scenario> = (0..count)
        .map(|id| Scenario {
            id,
            gen: [0.0; HOURS_PER_DAY],
            dem: [0.0; HOURS_PER_DAY],
            prob: 1.0 / count as f64,
        })
        .collect();
    let mut order: Vec<usize> = (0..count).collect();
    for h in 0..HOURS_PER_DAY {
        let g = sample_stratified(&gcdf[h], count, rng);
        let d = sample_stratified(&dcdf[h], count, rng);
        if mode == SamplingMode::Shuffled {
            order.shuffle(rng);
        }
        for (s, sc) in scenarios.iter_mut().enumerate() {
            sc.gen[h] = g[order[s]];
        }
        if mode == SamplingMode::Shuffled {
            order.shuffle(rng);
        }
        for (s, sc) in scenarios.iter_mut().enumerate() {
            sc.dem[h] = d[order[s]];
        }
    }
    Ok(ScenarioSet { scenarios })
}

/// Scenario probability: the mean over hours of the product of the
/// generation and demand bin probabilities.
pub fn score(set: &ScenarioSet, gen: &ProbabilityMatrix, dem: &ProbabilityMatrix) -> Vec<f64> {
    set.scenarios
        .iter()
        .map(|s| {
            (0..HOURS_PER_DAY)
                .map(|h| gen.prob_of_value(h, s.gen[h]) * dem.prob_of_value(h, s.dem[h]))
                .sum::<f64>()
                / HOURS_PER_DAY as f64
        })
        .collect()
}

/// Replaces each scenario's probability with its score.
pub fn with_scores(mut set: ScenarioSet, scores: &[f64]) -> Result<ScenarioSet> {
    if scores.len() != set.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} scenarios",
            scores.len(),
            set.len()
        )));
    }
    for (s, p) in set.scenarios.iter_mut().zip(scores) {
        s.prob = *p;
    }
    Ok(set)
}

/// Keeps the `keep` most probable scenarios (ties: lower id first) and
/// renormalises their probabilities.
pub fn select_top(set: &ScenarioSet, keep: usize) -> Result<ScenarioSet> {
    if keep == 0 || keep > set.len() {
        return Err(Error::invalid(format!(
            "cannot keep {keep} of {} scenarios",
            set.len()
        )));
    }
    let mut sorted = set.scenarios.clone();
    sorted.sort_by(|a, b| b.prob.total_cmp(&a.prob).then(a.id.cmp(&b.id)));
    sorted.truncate(keep);
    let total: f64 = sorted.iter().map(|s| s.prob).sum();
    if total > 0.0 {
        sorted.iter_mut().for_each(|s| s.prob /= total);
    } else {
        sorted.iter_mut().for_each(|s| s.prob = 1.0 / keep as f64);
    }
    Ok(ScenarioSet { scenarios: sorted })
}

/// Zeroes generation at hours when the sun is below the horizon.
pub fn apply_night_mask(set: &ScenarioSet, loc: &GeoLocation, day_of_year: u32) -> Result<ScenarioSet> {
    let mut night = [false; HOURS_PER_DAY];
    for (h, n) in night.iter_mut().enumerate() {
        *n = solar_position(loc, day_of_year, h as u32)?.is_night();
    }
    let mut out = set.clone();
    for s in out.scenarios.iter_mut() {
        for (g, dark) in s.gen.iter_mut().zip(night) {
            if dark {
                *g = 0.0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{BinAxis, RangeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_values(r: usize) -> Vec<f64> {
        (0..r).map(|k| k as f64 + 0.5).collect()
    }

    #[test]
    fn cdf_prefix_sums() {
        let c = build_cdf(&[0.5, 0.3, 0.2], uniform_values(3)).unwrap();
        let expect = [0.0, 0.5, 0.8, 1.0];
        for (a, b) in c.edges.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(c.edges[3], 1.0);
    }

    #[test]
    fn cdf_rejects_non_stochastic() {
        assert!(build_cdf(&[0.5, 0.3], uniform_values(2)).is_err());
        assert!(build_cdf(&[1.5, -0.5], uniform_values(2)).is_err());
    }

    #[test]
    fn point_mass_cdf_is_a_step() {
        let mut col = vec![0.0; 10];
        col[4] = 1.0;
        let c = build_cdf(&col, uniform_values(10)).unwrap();
        assert!(c.edges[..5].iter().all(|&e| e == 0.0));
        assert!(c.edges[5..].iter().all(|&e| e == 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_stratified(&c, 50, &mut rng).iter().all(|&v| v == 4.5));
    }

    #[test]
    fn uniform_cdf_one_sample_per_bin() {
        let r = 100;
        let c = build_cdf(&vec![1.0 / r as f64; r], uniform_values(r)).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_stratified(&c, r, &mut rng);
            let mut idx: Vec<usize> = s.iter().map(|v| v.floor() as usize).collect();
            idx.dedup();
            assert_eq!(idx.len(), r);
        }
    }

    #[test]
    fn samples_are_monotone_in_stratum() {
        let c = build_cdf(&[0.1, 0.0, 0.4, 0.2, 0.3], uniform_values(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = sample_stratified(&c, 40, &mut rng);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert!(!s.contains(&1.5));
    }

    fn point_matrix(quantity: Quantity, k: usize) -> ProbabilityMatrix {
        let axis = BinAxis::Uniform(RangeSpec::new(0.0, 5.0, 100).unwrap());
        ProbabilityMatrix::point_masses([k; 24], MatrixKind::Total, quantity, axis).unwrap()
    }

    #[test]
    fn point_masses_collapse() {
        let g = point_matrix(Quantity::Generation, 30);
        let d = point_matrix(Quantity::Demand, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = generate(&g, &d, 20, SamplingMode::Coherent, &mut rng).unwrap();
        let sc = score(&set, &g, &d);
        assert!(sc.iter().all(|&p| p == 1.0));
        let top = select_top(&with_scores(set, &sc).unwrap(), 10).unwrap();
        for s in &top.scenarios {
            assert!(s.gen.iter().all(|&v| v == g.axis.midpoint(0, 30)));
            assert!(s.dem.iter().all(|&v| v == d.axis.midpoint(0, 12)));
        }
        let merged = top.merge_duplicates();
        assert_eq!(merged.len(), 1);
        assert!((merged.scenarios[0].prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generate_is_deterministic() {
        let axis = BinAxis::Uniform(RangeSpec::new(0.0, 5.0, 50).unwrap());
        let col: Vec<f64> = (0..50).map(|k| k as f64 + 1.0).collect();
        let s: f64 = col.iter().sum();
        let col: Vec<f64> = col.iter().map(|v| v / s).collect();
        let g = ProbabilityMatrix::from_columns(vec![col.clone(); 24], MatrixKind::Total, Quantity::Generation, axis.clone()).unwrap();
        let d = ProbabilityMatrix::from_columns(vec![col; 24], MatrixKind::Total, Quantity::Demand, axis).unwrap();
        for mode in [SamplingMode::Coherent, SamplingMode::Shuffled] {
            let a = generate(&g, &d, 30, mode, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let b = generate(&g, &d, 30, mode, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert_eq!(a, b);
        }
        let one = generate(&g, &d, 1, SamplingMode::Coherent, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn score_is_a_mean_over_hours() {
        let axis = BinAxis::Uniform(RangeSpec::new(0.0, 1.0, 2).unwrap());
        let gcol = vec![0.04, 0.96];
        let dcol = vec![0.03, 0.97];
        let g = ProbabilityMatrix::from_columns(vec![gcol; 24], MatrixKind::Total, Quantity::Generation, axis.clone()).unwrap();
        let d = ProbabilityMatrix::from_columns(vec![dcol; 24], MatrixKind::Total, Quantity::Demand, axis).unwrap();
        let set = ScenarioSet::single([0.25; 24], [0.25; 24]);
        assert!((score(&set, &g, &d)[0] - 0.0012).abs() < 1e-15);

        // zero pair probability at one hour removes exactly that hour's term
        let mut gz = vec![vec![0.04, 0.96]; 24];
        gz[5] = vec![0.0, 1.0];
        let g2 = ProbabilityMatrix::from_columns(gz, MatrixKind::Total, Quantity::Generation, g.axis.clone()).unwrap();
        let p = score(&set, &g2, &d)[0];
        assert!((p - 0.0012 * 23.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn select_top_renormalises() {
        let mk = |id, prob| Scenario {
            id,
            gen: [0.0; 24],
            dem: [id as f64; 24],
            prob,
        };
        let set = ScenarioSet {
            scenarios: vec![mk(0, 0.4), mk(1, 0.4), mk(2, 0.2)],
        };
        let top = select_top(&set, 2).unwrap();
        assert_eq!(top.scenarios.iter().map(|s| s.id).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(top.probs(), vec![0.5, 0.5]);
        let one = select_top(&set, 1).unwrap();
        assert_eq!(one.scenarios[0].prob, 1.0);
        let all = select_top(&set, 3).unwrap();
        assert!((all.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(select_top(&set, 4).is_err());
    }

    #[test]
    fn night_mask() {
        let loc = GeoLocation::new(51.5, 0.0).unwrap();
        let set = ScenarioSet::single([2.0; 24], [1.0; 24]);
        let m = apply_night_mask(&set, &loc, 172).unwrap();
        assert_eq!(m.scenarios[0].gen[2], 0.0);
        assert_eq!(m.scenarios[0].gen[12], 2.0);
        let polar = apply_night_mask(&set, &GeoLocation::new(70.0, 0.0).unwrap(), 355).unwrap();
        assert!(polar.scenarios[0].gen.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let set = ScenarioSet {
            scenarios: vec![
                Scenario { id: 3, gen: [0.1; 24], dem: [1.0 / 3.0; 24], prob: 0.25 },
                Scenario { id: 7, gen: [0.2; 24], dem: [2.0; 24], prob: 0.75 },
            ],
        };
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        assert_eq!(ScenarioSet::read_csv(buf.as_slice()).unwrap(), set);
    }
}
