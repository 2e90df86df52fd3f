//! Contiguous hourly time series.

use chrono::{DateTime, Datelike, Duration, Timelike, Utc};

pub const HOURS_PER_DAY: usize = 24;

/// A gap-free hourly series starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub start: DateTime<Utc>,
    pub values: Vec<f64>,
}

/// One sample of an [`HourlySeries`] with its calendar position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: DateTime<Utc>,
    /// 1..=366
    pub day_of_year: u32,
    /// 0..=23
    pub hour: usize,
    pub value: f64,
}

impl HourlySeries {
    pub fn new(start: DateTime<Utc>, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.values.iter().enumerate().map(move |(i, &value)| {
            let time = self.start + Duration::hours(i as i64);
            Sample {
                time,
                day_of_year: time.ordinal(),
                hour: time.hour() as usize,
                value,
            }
        })
    }
}
