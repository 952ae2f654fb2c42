//! Daily episodes: loading, validation, eligibility filtering and
//! day classification, plus a deterministic synthetic generator.
//!
//! One episode is one calendar day of 96 fifteen-minute readings for one
//! house: residual (non-EV) load, historical EV charging and PV generation,
//! all in average kW per slot.

mod load;
mod synth;

pub use load::{load_episodes, CsvSchema, LoadOutcome};
pub use synth::{synth_generate, SynthProfile};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SLOTS_PER_DAY;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("slot series must have exactly {SLOTS_PER_DAY} values, got {0}")]
    WrongLength(usize),
    #[error("slot series value at index {index} is {value}, expected finite and >= 0")]
    InvalidValue { index: usize, value: f64 },
    #[error("csv header mismatch: expected column '{expected}' at position {position}")]
    SchemaMismatch { expected: String, position: usize },
    #[error("csv row {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("io error reading episode data: {0}")]
    Io(String),
    #[error("invalid generator parameters: {0}")]
    InvalidSynthConfig(String),
}

/// 96 per-slot readings (average kW), validated finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SlotSeries(Vec<f64>);

impl SlotSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != SLOTS_PER_DAY {
            return Err(DataError::WrongLength(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DataError::InvalidValue { index, value });
            }
        }
        Ok(Self(values))
    }

    /// All-zero series.
    pub fn zeros() -> Self {
        Self(vec![0.0; SLOTS_PER_DAY])
    }

    /// Builds a series from a per-slot function, validating the result.
    pub fn from_fn(f: impl FnMut(usize) -> f64) -> Result<Self, DataError> {
        Self::new((0..SLOTS_PER_DAY).map(f).collect())
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for SlotSeries {
    type Output = f64;
    fn index(&self, slot: usize) -> &f64 {
        &self.0[slot]
    }
}

impl std::ops::Deref for SlotSeries {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for SlotSeries {
    type Error = DataError;
    fn try_from(values: Vec<f64>) -> Result<Self, DataError> {
        Self::new(values)
    }
}

impl From<SlotSeries> for Vec<f64> {
    fn from(s: SlotSeries) -> Self {
        s.0
    }
}

/// One day of exogenous data for one house; the unit of training and
/// evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyEpisode {
    pub house_id: String,
    pub date: NaiveDate,
    /// 0 = Monday .. 6 = Sunday, always consistent with `date`.
    pub weekday: u8,
    /// Residual (non-EV) household load, kW.
    pub p_res: SlotSeries,
    /// Historical EV charging load, kW.
    pub p_ev: SlotSeries,
    /// Solar PV generation, kW.
    pub p_pv: SlotSeries,
}

impl DailyEpisode {
    pub fn new(
        house_id: impl Into<String>,
        date: NaiveDate,
        p_res: SlotSeries,
        p_ev: SlotSeries,
        p_pv: SlotSeries,
    ) -> Self {
        Self {
            house_id: house_id.into(),
            weekday: date.weekday().num_days_from_monday() as u8,
            date,
            p_res,
            p_ev,
            p_pv,
        }
    }

    /// Daily EV load as a kW-slot sum.
    pub fn ev_sum(&self) -> f64 {
        self.p_ev.sum()
    }

    /// Daily PV generation as a kW-slot sum.
    pub fn pv_sum(&self) -> f64 {
        self.p_pv.sum()
    }
}

/// Episode eligibility rules; defaults follow the dissertation's dataset
/// filter (daily EV load in [4, 96] kW-slot-sum, positive PV, at least 50
/// surviving days per house).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EligibilityCriteria {
    pub min_ev_sum: f64,
    pub max_ev_sum: f64,
    pub require_positive_pv: bool,
    pub min_days_per_house: usize,
}

impl Default for EligibilityCriteria {
    fn default() -> Self {
        Self {
            min_ev_sum: 4.0,
            max_ev_sum: 96.0,
            require_positive_pv: true,
            min_days_per_house: 50,
        }
    }
}

/// Keeps episodes whose daily EV sum lies in the configured band and whose
/// PV sum is positive (when required), then drops every episode of any
/// house left with fewer than `min_days_per_house` surviving days.
pub fn filter_eligible(
    episodes: Vec<DailyEpisode>,
    criteria: &EligibilityCriteria,
) -> Vec<DailyEpisode> {
    let surviving: Vec<DailyEpisode> = episodes
        .into_iter()
        .filter(|ep| {
            let ev = ep.ev_sum();
            let pv_ok = !criteria.require_positive_pv || ep.pv_sum() > 0.0;
            pv_ok && ev >= criteria.min_ev_sum && ev <= criteria.max_ev_sum
        })
        .collect();

    let mut counts = std::collections::BTreeMap::new();
    for ep in &surviving {
        *counts.entry(ep.house_id.clone()).or_insert(0usize) += 1;
    }
    surviving
        .into_iter()
        .filter(|ep| counts[&ep.house_id] >= criteria.min_days_per_house)
        .collect()
}

/// Demand-response quality of a day: `Good` days have an EV load above
/// 20 kW-slot-sum with PV generation exceeding the EV load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrClass {
    Good,
    Bad,
}

impl DrClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DrClass::Good => "good",
            DrClass::Bad => "bad",
        }
    }
}

/// Classifies a day for demand response; both inequalities are strict.
pub fn classify_dr_day(episode: &DailyEpisode) -> DrClass {
    let ev = episode.ev_sum();
    if ev > 20.0 && episode.pv_sum() > ev {
        DrClass::Good
    } else {
        DrClass::Bad
    }
}
