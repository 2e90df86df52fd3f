//! Per-hour discrete distributions over power bins.
//!
//! A [`ProbabilityMatrix`] holds one column of `R` bin probabilities for each
//! of the 24 hours. Demand is binned on a fixed kW range. PV is binned in
//! "class" space: each class is a fraction of the feasible band between the
//! historical minimum and the clear-sky maximum at that day and hour, which
//! removes the seasonal magnitude from the data. A class-space matrix is
//! projected onto a concrete day's band with [`ProbabilityMatrix::project`].

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::series::{HourlySeries, HOURS_PER_DAY};
use crate::solar::{PvEnvelope, NIGHT_EPS_KW};

/// Columns must sum to one within this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl RangeSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("range needs lo < hi, got [{lo}, {hi}]")));
        }
        if bins < 2 {
            return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn bin_index(&self, x: f64) -> usize {
        bin_of(self.lo, self.hi, self.bins, x)
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    /// Lower edge of bin `k`; `edge(bins)` is `hi`.
    pub fn edge(&self, k: usize) -> f64 {
        if k == self.bins {
            self.hi
        } else {
            self.lo + k as f64 * self.width()
        }
    }
}

fn bin_of(lo: f64, hi: f64, bins: usize, x: f64) -> usize {
    let w = (hi - lo) / bins as f64;
    let k = ((x - lo) / w).floor();
    if k.is_nan() || k < 0.0 {
        0
    } else {
        (k as usize).min(bins - 1)
    }
}

/// How bin indices map to kW at each hour.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum BinAxis {
    /// The same kW range at every hour.
    Uniform(RangeSpec),
    /// A separate kW band per hour. Hours with `hi − lo ≤ ε` are night:
    /// every bin maps to `lo`.
    PerHour {
        bins: usize,
        lo: [f64; HOURS_PER_DAY],
        hi: [f64; HOURS_PER_DAY],
    },
    /// Dimensionless classes over the feasible PV band; no kW meaning until
    /// projected onto a day.
    Classes { bins: usize },
}

impl BinAxis {
    pub fn bins(&self) -> usize {
        match self {
            BinAxis::Uniform(r) => r.bins,
            BinAxis::PerHour { bins, .. } | BinAxis::Classes { bins } => *bins,
        }
    }

    /// kW band at an hour. Classes map to [0, 1].
    pub fn band(&self, hour: usize) -> (f64, f64) {
        match self {
            BinAxis::Uniform(r) => (r.lo, r.hi),
            BinAxis::PerHour { lo, hi, .. } => (lo[hour], hi[hour]),
            BinAxis::Classes { .. } => (0.0, 1.0),
        }
    }

    pub fn is_night(&self, hour: usize) -> bool {
        let (lo, hi) = self.band(hour);
        hi - lo <= NIGHT_EPS_KW
    }

    pub fn bin_width(&self, hour: usize) -> f64 {
        let (lo, hi) = self.band(hour);
        (hi - lo) / self.bins() as f64
    }

    pub fn bin_index(&self, hour: usize, x: f64) -> usize {
        if self.is_night(hour) {
            return 0;
        }
        let (lo, hi) = self.band(hour);
        bin_of(lo, hi, self.bins(), x)
    }

    /// Representative value of a bin (its midpoint).
    pub fn midpoint(&self, hour: usize, k: usize) -> f64 {
        let (lo, _) = self.band(hour);
        if self.is_night(hour) {
            return lo;
        }
        lo + (k as f64 + 0.5) * self.bin_width(hour)
    }

    /// Per-hour band of a day from the PV envelope.
    pub fn from_envelope(env: &PvEnvelope, day_of_year: u32, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
        }
        let (lo, hi) = env.day(day_of_year)?;
        Ok(BinAxis::PerHour { bins, lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    Forecast,
    Historical,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Generation,
    Demand,
}

/// `R × 24` column-stochastic matrix stored hour-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    values: Vec<f64>,
    pub kind: MatrixKind,
    pub quantity: Quantity,
    pub axis: BinAxis,
}

impl ProbabilityMatrix {
    /// Builds a matrix from 24 columns, validating stochasticity.
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        kind: MatrixKind,
        quantity: Quantity,
        axis: BinAxis,
    ) -> Result<Self> {
        let bins = axis.bins();
        if columns.len() != HOURS_PER_DAY {
            return Err(Error::ShapeMismatch(format!(
                "expected {HOURS_PER_DAY} columns, got {}",
                columns.len()
            )));
        }
        let mut values = Vec::with_capacity(bins * HOURS_PER_DAY);
        for (h, col) in columns.into_iter().enumerate() {
            if col.len() != bins {
                return Err(Error::ShapeMismatch(format!(
                    "column {h} has {} entries, expected {bins}",
                    col.len()
                )));
            }
            values.extend(col);
        }
        let m = Self {
            values,
            kind,
            quantity,
            axis,
        };
        m.check_stochastic()?;
        Ok(m)
    }

    /// Every column a point mass at the given bin.
    pub fn point_masses(
        bins_at: [usize; HOURS_PER_DAY],
        kind: MatrixKind,
        quantity: Quantity,
        axis: BinAxis,
    ) -> Result<Self> {
        let r = axis.bins();
        let columns = bins_at
            .iter()
            .map(|&k| {
                let mut c = vec![0.0; r];
                c[k.min(r - 1)] = 1.0;
                c
            })
            .collect();
        Self::from_columns(columns, kind, quantity, axis)
    }

    pub fn bins(&self) -> usize {
        self.axis.bins()
    }

    pub fn column(&self, hour: usize) -> &[f64] {
        let r = self.bins();
        &self.values[hour * r..(hour + 1) * r]
    }

    pub fn prob(&self, hour: usize, bin: usize) -> f64 {
        self.values[hour * self.bins() + bin]
    }

    /// Probability of the bin containing `x` at `hour`.
    pub fn prob_of_value(&self, hour: usize, x: f64) -> f64 {
        self.prob(hour, self.axis.bin_index(hour, x))
    }

    /// Mean kW of the column under bin-midpoint representatives.
    pub fn column_mean(&self, hour: usize) -> f64 {
        self.column(hour)
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.axis.midpoint(hour, k))
            .sum()
    }

    pub fn column_std(&self, hour: usize) -> f64 {
        let mean = self.column_mean(hour);
        self.column(hour)
            .iter()
            .enumerate()
            .map(|(k, p)| p * (self.axis.midpoint(hour, k) - mean).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_stochastic(&self) -> Result<()> {
        for h in 0..HOURS_PER_DAY {
            let col = self.column(h);
            if col.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::invalid(format!("column {h} has a negative or non-finite entry")));
            }
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::invalid(format!("column {h} sums to {s}")));
            }
        }
        Ok(())
    }

    /// Relabels a class-space matrix onto a concrete axis with the same bin
    /// count. Night hours of the target axis become a point mass at bin 0.
    pub fn project(&self, axis: BinAxis) -> Result<Self> {
        if !matches!(self.axis, BinAxis::Classes { .. }) {
            return Err(Error::invalid("only class-space matrices can be projected"));
        }
        if axis.bins() != self.bins() {
            return Err(Error::ShapeMismatch(format!(
                "projection from {} to {} bins",
                self.bins(),
                axis.bins()
            )));
        }
        let r = self.bins();
        let columns = (0..HOURS_PER_DAY)
            .map(|h| {
                if axis.is_night(h) {
                    point(r, 0)
                } else {
                    self.column(h).to_vec()
                }
            })
            .collect();
        Self::from_columns(columns, self.kind, self.quantity, axis)
    }

    /// Writes the matrix as `R` rows × 24 columns with the hour as header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..HOURS_PER_DAY).map(|h| h.to_string()))?;
        for k in 0..self.bins() {
            w.write_record((0..HOURS_PER_DAY).map(|h| self.prob(h, k).to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads the `R × 24` values written by [`ProbabilityMatrix::write_csv`],
/// returned as 24 columns.
pub fn read_matrix_csv<R: std::io::Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.len() != HOURS_PER_DAY || header.iter().enumerate().any(|(h, s)| s != h.to_string()) {
        return Err(Error::Schema {
            file: "matrix".into(),
            row: 1,
            message: "header must be the hours 0..23".into(),
        });
    }
    let mut columns = vec![Vec::new(); HOURS_PER_DAY];
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        for (h, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Schema {
                file: "matrix".into(),
                row: i + 2,
                message: format!("bad number {field:?}"),
            })?;
            columns[h].push(v);
        }
    }
    Ok(columns)
}

fn point(bins: usize, k: usize) -> Vec<f64> {
    let mut c = vec![0.0; bins];
    c[k] = 1.0;
    c
}

fn normalize(col: &mut [f64]) {
    let s: f64 = col.iter().sum();
    if s > 0.0 {
        col.iter_mut().for_each(|p| *p /= s);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyStats {
    pub mean: [f64; HOURS_PER_DAY],
    pub sigma: [f64; HOURS_PER_DAY],
}

/// Sample mean and sample standard deviation per hour of day, with sigma
/// floored at `sigma_floor`.
pub fn hourly_stats(history: &HourlySeries, sigma_floor: f64) -> Result<HourlyStats> {
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); HOURS_PER_DAY];
    for s in history.samples() {
        buckets[s.hour].push(s.value);
    }
    let mut mean = [0.0; HOURS_PER_DAY];
    let mut sigma = [0.0; HOURS_PER_DAY];
    for (h, b) in buckets.iter().enumerate() {
        if b.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "hour {h} has {} samples, need at least 2",
                b.len()
            )));
        }
        let n = b.len() as f64;
        let m = b.iter().sum::<f64>() / n;
        let var = b.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        mean[h] = m;
        sigma[h] = var.sqrt().max(sigma_floor.max(0.0));
    }
    Ok(HourlyStats { mean, sigma })
}

/// Upper-tail normal probability Q(z) = 1 − Φ(z).
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// P(a ≤ Z < b) for a standard normal, accurate in both tails.
pub(crate) fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else if b <= 0.0 {
        upper_tail(-b) - upper_tail(-a)
    } else {
        1.0 - upper_tail(-a) - upper_tail(b)
    }
}

/// Gaussian around each hour's forecast with the historical sigma, truncated
/// to the hour's band and discretised into the axis bins.
pub fn forecast_matrix(
    forecast: &[f64; HOURS_PER_DAY],
    stats: &HourlyStats,
    axis: &BinAxis,
    quantity: Quantity,
) -> Result<ProbabilityMatrix> {
    if matches!(axis, BinAxis::Classes { .. }) {
        return Err(Error::invalid("forecast matrices need a kW axis"));
    }
    let r = axis.bins();
    let columns = (0..HOURS_PER_DAY)
        .map(|h| {
            if axis.is_night(h) {
                return point(r, 0);
            }
            let (lo, hi) = axis.band(h);
            let width = axis.bin_width(h);
            let mu = forecast[h].clamp(lo, hi);
            let sigma = stats.sigma[h].max(width);
            let mut col: Vec<f64> = (0..r)
                .map(|k| {
                    let a = lo + k as f64 * width;
                    let b = if k + 1 == r { hi } else { lo + (k + 1) as f64 * width };
                    normal_mass((a - mu) / sigma, (b - mu) / sigma)
                })
                .collect();
            if col.iter().sum::<f64>() <= 0.0 {
                return point(r, axis.bin_index(h, mu));
            }
            normalize(&mut col);
            col
        })
        .collect();
    ProbabilityMatrix::from_columns(columns, MatrixKind::Forecast, quantity, axis.clone())
}

/// Empirical per-hour bin frequencies of demand.
pub fn historical_demand_matrix(history: &HourlySeries, range: RangeSpec) -> Result<ProbabilityMatrix> {
    let r = range.bins;
    let mut counts = vec![vec![0.0; r]; HOURS_PER_DAY];
    for s in history.samples() {
        counts[s.hour][range.bin_index(s.value)] += 1.0;
    }
    for (h, c) in counts.iter_mut().enumerate() {
        if c.iter().sum::<f64>() == 0.0 {
            return Err(Error::InsufficientData(format!("no demand samples at hour {h}")));
        }
        normalize(c);
    }
    ProbabilityMatrix::from_columns(
        counts,
        MatrixKind::Historical,
        Quantity::Demand,
        BinAxis::Uniform(range),
    )
}

/// Class of a PV observation within its feasible band.
pub fn pv_class(x: f64, p_min: f64, p_max: f64, bins: usize) -> usize {
    if p_max - p_min <= NIGHT_EPS_KW {
        return if x >= p_max { bins - 1 } else { 0 };
    }
    let k = (bins as f64 * (x - p_min) / (p_max - p_min)).floor();
    if k.is_nan() || k < 0.0 {
        0
    } else {
        (k as usize).min(bins - 1)
    }
}

/// Per-hour class frequencies of PV relative to the envelope. Night samples
/// and days without a covered envelope window are skipped; an hour with no daylight samples is a point mass at class 0.
pub fn historical_pv_matrix(history: &HourlySeries, env: &PvEnvelope, bins: usize) -> Result<ProbabilityMatrix> {
    if bins < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
    }
    let mut counts = vec![vec![0.0; bins]; HOURS_PER_DAY];
    for s in history.samples() {
        let p_max = env.p_max(s.day_of_year, s.hour)?;
        if p_max <= NIGHT_EPS_KW || !env.is_covered(s.day_of_year) {
            continue;
        }
        let p_min = env.p_min(s.day_of_year, s.hour)?;
        counts[s.hour][pv_class(s.value.min(p_max), p_min, p_max, bins)] += 1.0;
    }
    for c in counts.iter_mut() {
        if c.iter().sum::<f64>() == 0.0 {
            c[0] = 1.0;
        } else {
            normalize(c);
        }
    }
    ProbabilityMatrix::from_columns(
        counts,
        MatrixKind::Historical,
        Quantity::Generation,
        BinAxis::Classes { bins },
    )
}

/// `λ·forecast + (1 − λ)·historical`, elementwise.
pub fn combine(forecast: &ProbabilityMatrix, historical: &ProbabilityMatrix, lambda: f64) -> Result<ProbabilityMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("weight {lambda} outside [0, 1]")));
    }
    if forecast.quantity != historical.quantity {
        return Err(Error::ShapeMismatch("cannot combine generation with demand".into()));
    }
    if forecast.axis != historical.axis {
        return Err(Error::ShapeMismatch("matrices have different bin axes".into()));
    }
    let values = forecast
        .values
        .iter()
        .zip(&historical.values)
        .map(|(f, h)| {
            if lambda == 1.0 {
                *f
            } else if lambda == 0.0 {
                *h
            } else {
                lambda * f + (1.0 - lambda) * h
            }
        })
        .collect();
    Ok(ProbabilityMatrix {
        values,
        kind: MatrixKind::Total,
        quantity: forecast.quantity,
        axis: forecast.axis.clone(),
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::plant::PlantConfig;
    use crate::solar::{build_envelope, GeoLocation};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> HourlySeries {
        HourlySeries::new(Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(), values)
    }

    /// Composite Simpson integral of the normal density.
    fn simpson_mass(a: f64, b: f64, mu: f64, sigma: f64) -> f64 {
        let n = 2000;
        let h = (b - a) / n as f64;
        let f = |x: f64| (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn stats_constant_series_hits_floor() {
        let st = hourly_stats(&series(vec![1.0; 72]), 0.05).unwrap();
        assert!(st.mean.iter().all(|m| (m - 1.0).abs() < 1e-12));
        assert!(st.sigma.iter().all(|s| *s == 0.05));
    }

    #[test]
    fn stats_two_samples() {
        let mut v = vec![0.0; 48];
        v[7] = 1.0;
        v[31] = 3.0;
        let st = hourly_stats(&series(v), 0.0).unwrap();
        assert!((st.mean[7] - 2.0).abs() < 1e-12);
        assert!((st.sigma[7] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stats_need_two_samples_per_hour() {
        assert!(matches!(
            hourly_stats(&series(vec![1.0; 30]), 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn forecast_bin_matches_quadrature() {
        let range = RangeSpec::new(0.0, 5.0, 100).unwrap();
        let stats = HourlyStats {
            mean: [0.0; 24],
            sigma: [0.5; 24],
        };
        let m = forecast_matrix(&[2.5; 24], &stats, &BinAxis::Uniform(range), Quantity::Demand).unwrap();
        let total = simpson_mass(0.0, 5.0, 2.5, 0.5);
        let expect = simpson_mass(2.5, 2.55, 2.5, 0.5) / total;
        assert!((m.prob(3, 50) - expect).abs() < 1e-9);
        assert!((m.prob(3, 50) - 0.0398).abs() < 1e-4);
    }

    #[test]
    fn floor_sigma_concentrates_mass() {
        let range = RangeSpec::new(0.0, 5.0, 100).unwrap();
        let stats = HourlyStats {
            mean: [0.0; 24],
            sigma: [0.0; 24],
        };
        let mid = range.midpoint(40);
        let m = forecast_matrix(&[mid; 24], &stats, &BinAxis::Uniform(range), Quantity::Demand).unwrap();
        let near: f64 = (37..=43).map(|k| m.prob(0, k)).sum();
        assert!(near >= 0.99, "{near}");
    }

    #[test]
    fn demand_counts() {
        let range = RangeSpec::new(0.0, 5.0, 100).unwrap();
        let mut v = vec![0.0; 72];
        v[9] = 0.2;
        v[33] = 0.2;
        v[57] = 4.9;
        let m = historical_demand_matrix(&series(v), range).unwrap();
        assert!((m.prob(9, 4) - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.prob(9, 98) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.prob(0, 0), 1.0);
    }

    #[test]
    fn demand_uniform_column() {
        let range = RangeSpec::new(0.0, 5.0, 100).unwrap();
        let mut v = vec![0.0; 24 * 100];
        for d in 0..100 {
            v[d * 24 + 9] = range.midpoint(d);
        }
        let m = historical_demand_matrix(&series(v), range).unwrap();
        assert!(m.column(9).iter().all(|p| (p - 0.01).abs() < 1e-12));
    }

    #[test]
    fn pv_class_boundaries() {
        assert_eq!(pv_class(5.0, 1.0, 5.0, 100), 99);
        assert_eq!(pv_class(1.0, 1.0, 5.0, 100), 0);
        assert_eq!(pv_class(3.0, 1.0, 5.0, 100), 50);
        assert_eq!(pv_class(0.0, 1.0, 5.0, 100), 0);
    }

    #[test]
    fn historical_pv_night_columns_are_point_masses() {
        let plant = PlantConfig::default();
        let loc = GeoLocation::new(51.5, 0.0).unwrap();
        let hist = series((0..365 * 24).map(|i| ((i % 24) as f64 - 12.0).abs().min(3.0)).collect());
        let env = build_envelope(&hist, &loc, &plant).unwrap();
        let m = historical_pv_matrix(&hist, &env, 100).unwrap();
        assert_eq!(m.prob(0, 0), 1.0);
        assert_eq!(m.prob(23, 0), 1.0);
        m.check_stochastic().unwrap();
    }

    #[test]
    fn combine_rules() {
        let range = RangeSpec::new(0.0, 5.0, 10).unwrap();
        let stats = HourlyStats {
            mean: [0.0; 24],
            sigma: [1.0; 24],
        };
        let f = forecast_matrix(&[1.0; 24], &stats, &BinAxis::Uniform(range), Quantity::Demand).unwrap();
        let g = forecast_matrix(&[3.0; 24], &stats, &BinAxis::Uniform(range), Quantity::Demand).unwrap();
        let same = combine(&f, &f, 0.5).unwrap();
        for h in 0..24 {
            for k in 0..10 {
                assert!((same.prob(h, k) - f.prob(h, k)).abs() < 1e-15);
            }
        }
        let only_f = combine(&f, &g, 1.0).unwrap();
        assert_eq!(only_f.column(5), f.column(5));
        let avg = combine(&f, &g, 0.5).unwrap();
        assert_eq!(avg.kind, MatrixKind::Total);
        avg.check_stochastic().unwrap();

        let other = RangeSpec::new(0.0, 6.0, 10).unwrap();
        let h = forecast_matrix(&[1.0; 24], &stats, &BinAxis::Uniform(other), Quantity::Demand).unwrap();
        assert!(matches!(combine(&f, &h, 0.5), Err(Error::ShapeMismatch(_))));
        let gen = forecast_matrix(&[1.0; 24], &stats, &BinAxis::Uniform(range), Quantity::Generation).unwrap();
        assert!(matches!(combine(&f, &gen, 0.5), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn csv_round_trip() {
        let range = RangeSpec::new(0.0, 3.0, 7).unwrap();
        let stats = HourlyStats {
            mean: [0.0; 24],
            sigma: [0.7; 24],
        };
        let m = forecast_matrix(&[1.1; 24], &stats, &BinAxis::Uniform(range), Quantity::Demand).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let cols = read_matrix_csv(buf.as_slice()).unwrap();
        for h in 0..24 {
            assert_eq!(cols[h].as_slice(), m.column(h));
        }
    }

    proptest! {
        #[test]
        fn forecast_columns_are_stochastic(
            fc in proptest::collection::vec(-1.0f64..8.0, 24),
            sigma in 0.0f64..3.0,
            bins in 2usize..150,
        ) {
            let range = RangeSpec::new(0.0, 6.0, bins).unwrap();
            let stats = HourlyStats { mean: [0.0; 24], sigma: [sigma; 24] };
            let fc: [f64; 24] = fc.try_into().unwrap();
            let m = forecast_matrix(&fc, &stats, &BinAxis::Uniform(range), Quantity::Demand).unwrap();
            prop_assert!(m.check_stochastic().is_ok());
        }

        #[test]
        fn pv_class_is_scale_free(x in 0.0f64..10.0, lo in 0.0f64..3.0, span in 0.1f64..8.0, c in 0.01f64..50.0) {
            let hi = lo + span;
            prop_assert_eq!(pv_class(x * c, lo * c, hi * c, 100), pv_class(x, lo, hi, 100));
        }
    }
}
