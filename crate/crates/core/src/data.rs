//! Hourly building dataset: ingestion, validation, day access and a seeded
//! synthetic generator.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Timelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::plant::{PlantConfig, TariffDay};
use crate::scenario::Profile;
use crate::series::{HourlySeries, HOURS_PER_DAY};
use crate::solar::{clear_sky_pv, GeoLocation};

pub const CSV_HEADER: [&str; 5] = ["timestamp", "demand_kw", "pv_kw", "tou_imp_eur_kwh", "tou_exp_eur_kwh"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub time: DateTime<Utc>,
    pub demand_kw: f64,
    pub pv_kw: f64,
    pub tou_imp: f64,
    pub tou_exp: f64,
}

/// Gap-free hourly records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
}

impl Dataset {
    /// Sorts, then rejects duplicates, gaps, off-hour stamps and bad values.
    pub fn from_records(mut records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InsufficientData("dataset has no records".into()));
        }
        records.sort_by_key(|r| r.time);
        for (i, r) in records.iter().enumerate() {
            if r.time.minute() != 0 || r.time.second() != 0 || r.time.nanosecond() != 0 {
                return Err(Error::invalid(format!("timestamp {} is not on the hour", r.time)));
            }
            check_values(r).map_err(|m| Error::invalid(format!("record at {}: {m}", r.time)))?;
            if i > 0 {
                let prev = records[i - 1].time;
                if r.time == prev {
                    return Err(Error::DuplicateTimestamp(r.time));
                }
                if r.time - prev != Duration::hours(1) {
                    return Err(Error::Gap(prev + Duration::hours(1)));
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.records[0].time
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.records[self.records.len() - 1].time
    }

    fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let off = (t - self.start()).num_hours();
        (off >= 0 && (off as usize) < self.len()).then_some(off as usize)
    }

    /// Records of a whole calendar day (UTC).
    pub fn day(&self, date: NaiveDate) -> Result<&[Record]> {
        let t = midnight(date);
        let i = self.index_of(t).ok_or_else(|| Error::MissingDay(date.to_string()))?;
        if i + HOURS_PER_DAY > self.len() {
            return Err(Error::MissingDay(date.to_string()));
        }
        Ok(&self.records[i..i + HOURS_PER_DAY])
    }

    pub fn has_day(&self, date: NaiveDate) -> bool {
        self.day(date).is_ok()
    }

    /// `(pv, demand)` actuals of a day.
    pub fn actuals(&self, date: NaiveDate) -> Result<(Profile, Profile)> {
        let d = self.day(date)?;
        Ok((
            std::array::from_fn(|h| d[h].pv_kw),
            std::array::from_fn(|h| d[h].demand_kw),
        ))
    }

    pub fn tariff(&self, date: NaiveDate) -> Result<TariffDay> {
        let d = self.day(date)?;
        TariffDay::new(
            std::array::from_fn(|h| d[h].tou_imp),
            std::array::from_fn(|h| d[h].tou_exp),
        )
    }

    /// Complete days covered by the dataset, in order.
    pub fn days(&self) -> Vec<NaiveDate> {
        let mut out = Vec::new();
        let mut date = self.start().date_naive();
        if self.start().hour() != 0 {
            date += Duration::days(1);
        }
        while self.has_day(date) {
            out.push(date);
            date += Duration::days(1);
        }
        out
    }

    /// PV and demand series of every record strictly before `date`.
    pub fn history_before(&self, date: NaiveDate) -> Result<(HourlySeries, HourlySeries)> {
        let cut = midnight(date);
        let n = self.records.iter().take_while(|r| r.time < cut).count();
        if n == 0 {
            return Err(Error::InsufficientHistory(format!("no records before {date}")));
        }
        let rs = &self.records[..n];
        Ok((
            HourlySeries::new(self.start(), rs.iter().map(|r| r.pv_kw).collect()),
            HourlySeries::new(self.start(), rs.iter().map(|r| r.demand_kw).collect()),
        ))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.time.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
                format!("{:.4}", r.demand_kw),
                format!("{:.4}", r.pv_kw),
                format!("{:.4}", r.tou_imp),
                format!("{:.4}", r.tou_exp),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn midnight(date: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight exists"))
}

fn check_values(r: &Record) -> std::result::Result<(), String> {
    for (name, v) in [
        ("demand_kw", r.demand_kw),
        ("pv_kw", r.pv_kw),
        ("tou_imp_eur_kwh", r.tou_imp),
        ("tou_exp_eur_kwh", r.tou_exp),
    ] {
        if !v.is_finite() {
            return Err(format!("{name} is not a finite number"));
        }
        if v < 0.0 {
            return Err(format!("{name} is negative ({v})"));
        }
    }
    Ok(())
}

/// Parses one CSV file. `file` only labels error messages. Row numbers count
/// the header as row 1.
pub fn read_records<R: Read>(input: R, file: &str) -> Result<Vec<Record>> {
    let schema = |row: usize, message: String| Error::Schema {
        file: file.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols != CSV_HEADER {
        return Err(schema(1, format!("expected header {}, got {}", CSV_HEADER.join(","), cols.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| schema(row, e.to_string()))?;
        if rec.len() != CSV_HEADER.len() {
            return Err(schema(row, format!("expected 5 fields, got {}", rec.len())));
        }
        let time = DateTime::parse_from_rfc3339(&rec[0])
            .map_err(|e| schema(row, format!("bad timestamp {:?}: {e}", &rec[0])))?
            .with_timezone(&Utc);
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| schema(row, format!("{} is not a number: {:?}", CSV_HEADER[k], &rec[k])))
        };
        let r = Record {
            time,
            demand_kw: num(1)?,
            pv_kw: num(2)?,
            tou_imp: num(3)?,
            tou_exp: num(4)?,
        };
        check_values(&r).map_err(|m| schema(row, m))?;
        out.push(r);
    }
    Ok(out)
}

/// Reads and merges one or more CSV files into a validated dataset.
pub fn ingest<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    let mut all = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let f = std::fs::File::open(p)?;
        all.extend(read_records(std::io::BufReader::new(f), &p.display().to_string())?);
    }
    Dataset::from_records(all)
}

/// Time-of-use prices for the synthetic dataset, €/kWh.
pub fn synthetic_tariff() -> TariffDay {
    let imp = std::array::from_fn(|h| match h {
        0..=6 => 0.10,
        17..=20 => 0.32,
        _ => 0.20,
    });
    TariffDay {
        tou_imp: imp,
        tou_exp: [0.05; HOURS_PER_DAY],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    /// First evaluation day; history precedes it.
    pub eval_start: NaiveDate,
    pub eval_days: u32,
    pub history_days: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            eval_start: NaiveDate::from_ymd_opt(2023, 3, 1).expect("valid date"),
            eval_days: 30,
            history_days: 365,
        }
    }
}

impl SynthSpec {
    pub fn start(&self) -> NaiveDate {
        self.eval_start - Duration::days(self.history_days as i64)
    }

    pub fn end(&self) -> NaiveDate {
        self.eval_start + Duration::days(self.eval_days as i64 - 1)
    }
}

/// Household-like demand shape, kW.
fn base_demand(h: usize, weekend: bool) -> f64 {
    let morning = if weekend { 0.6 } else { 1.1 };
    match h {
        0..=5 => 0.35,
        6 => 0.6,
        7..=8 => morning,
        9..=15 => {
            if weekend {
                0.9
            } else {
                0.5
            }
        }
        16 => 0.9,
        17..=20 => 1.9,
        21 => 1.3,
        22 => 0.8,
        _ => 0.5,
    }
}

/// Seeded synthetic PV/demand/tariff records: clear-sky PV dimmed by a
/// persistent daily cloudiness process plus hourly noise, and a two-peak
/// household load with day-to-day and hour-to-hour variation.
pub fn synthesize(spec: &SynthSpec, loc: &GeoLocation, plant: &PlantConfig) -> Result<Dataset> {
    loc.validate()?;
    plant.validate()?;
    if spec.eval_days == 0 {
        return Err(Error::invalid("need at least one evaluation day"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let tariff = synthetic_tariff();
    let total_days = spec.history_days + spec.eval_days;
    let mut records = Vec::with_capacity(total_days as usize * HOURS_PER_DAY);
    let mut cloud_state: f64 = 0.0;
    for d in 0..total_days {
        let date = spec.start() + Duration::days(d as i64);
        let doy = date.ordinal();
        let weekend = date.weekday().number_from_monday() >= 6;
        cloud_state = 0.6 * cloud_state + 0.8 * unit.sample(&mut rng);
        // Fraction of clear-sky output reaching the panels today.
        let clearness = (0.62 + 0.28 * cloud_state.tanh()).clamp(0.08, 1.0);
        let day_load = (1.0 + 0.12 * unit.sample(&mut rng)).clamp(0.7, 1.35);
        let winter = 1.0 + 0.25 * (2.0 * std::f64::consts::PI * (doy as f64 - 15.0) / 365.0).cos();
        for h in 0..HOURS_PER_DAY {
            let clear = clear_sky_pv(loc, plant, doy, h as u32)?;
            let pv = if clear > 0.0 {
                let jitter: f64 = rng.random_range(0.75..1.1);
                (clear * clearness * jitter).min(clear)
            } else {
                0.0
            };
            let noise = (1.0 + 0.18 * unit.sample(&mut rng)).clamp(0.5, 1.6);
            let demand = (base_demand(h, weekend) * day_load * winter * noise).clamp(0.1, 4.5);
            records.push(Record {
                time: midnight(date) + Duration::hours(h as i64),
                demand_kw: round4(demand),
                pv_kw: round4(pv),
                tou_imp: tariff.tou_imp[h],
                tou_exp: tariff.tou_exp[h],
            });
        }
    }
    Dataset::from_records(records)
}

/// Values are stored with four decimals so CSV round trips are exact.
fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize) -> String {
        let mut s = CSV_HEADER.join(",") + "\n";
        for i in 0..n {
            let t = midnight(NaiveDate::from_ymd_opt(2023, 1, 1).unwrap()) + Duration::hours(i as i64);
            s += &format!("{},1.0,0.5,0.2,0.05\n", t.format("%Y-%m-%dT%H:%M:%SZ"));
        }
        s
    }

    #[test]
    fn well_formed_file() {
        let recs = read_records(rows(48).as_bytes(), "a.csv").unwrap();
        let ds = Dataset::from_records(recs).unwrap();
        assert_eq!(ds.len(), 48);
        assert_eq!(ds.days().len(), 2);
        let (pv, dem) = ds.actuals(NaiveDate::from_ymd_opt(2023, 1, 2).unwrap()).unwrap();
        assert_eq!(pv[5], 0.5);
        assert_eq!(dem[23], 1.0);
    }

    #[test]
    fn duplicate_timestamp_named() {
        let mut s = rows(3);
        s += "2023-01-01T01:00:00Z,1,0,0.2,0.05\n";
        let err = Dataset::from_records(read_records(s.as_bytes(), "a.csv").unwrap()).unwrap_err();
        assert!(err.to_string().contains("2023-01-01 01:00:00"), "{err}");
    }

    #[test]
    fn negative_demand_rejected_with_row() {
        let s = rows(2).replace("2023-01-01T01:00:00Z,1.0", "2023-01-01T01:00:00Z,-1.0");
        match read_records(s.as_bytes(), "a.csv") {
            Err(Error::Schema { row, message, .. }) => {
                assert_eq!(row, 3);
                assert!(message.contains("demand_kw"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_reports_missing_hour() {
        let s: String = rows(5)
            .lines()
            .enumerate()
            .filter(|(i, _)| *i != 3)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        match Dataset::from_records(read_records(s.as_bytes(), "a.csv").unwrap()) {
            Err(Error::Gap(t)) => assert_eq!(t.hour(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        let s = "time,demand_kw,pv_kw,tou_imp_eur_kwh,tou_exp_eur_kwh\n";
        assert!(matches!(read_records(s.as_bytes(), "a.csv"), Err(Error::Schema { row: 1, .. })));
    }

    #[test]
    fn synthetic_round_trip() {
        let spec = SynthSpec {
            history_days: 10,
            eval_days: 3,
            ..SynthSpec::default()
        };
        let loc = GeoLocation::new(51.5, -0.1).unwrap();
        let ds = synthesize(&spec, &loc, &PlantConfig::default()).unwrap();
        assert_eq!(ds.len(), 13 * 24);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::from_records(read_records(buf.as_slice(), "x").unwrap()).unwrap();
        assert_eq!(back, ds);
        let again = synthesize(&spec, &loc, &PlantConfig::default()).unwrap();
        assert_eq!(again, ds);
        for r in ds.records() {
            assert!(r.demand_kw <= 4.5 && r.pv_kw <= 12.0);
        }
    }
}
