//! Time-of-Use tariff bands and per-slot grid-exchange cost.
//!
//! A [`TariffSchedule`] partitions the 96 daily slots into price bands
//! (off-peak / mid-peak / on-peak, 2018 Austin TX rates by default). The
//! buying and selling prices are equal (net metering), so the per-slot cost
//! [`step_cost`] may be negative when PV generation exceeds consumption.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SLOTS_PER_DAY;

#[derive(Debug, Error, PartialEq)]
pub enum TariffError {
    #[error("tariff bands must partition slots [0,96): gap or overlap at slot {0}")]
    NotAPartition(usize),
    #[error("tariff price must be > 0, got {0}")]
    NonPositivePrice(f64),
    #[error("band range {start}..{end} is invalid")]
    InvalidBand { start: usize, end: usize },
}

/// Price-band label, in ascending price order for the default schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TariffPeriod {
    OffPeak,
    MidPeak,
    OnPeak,
}

/// One contiguous band of slots with a single $/kWh price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffBand {
    /// First slot covered by the band (0..=95).
    pub start_slot: usize,
    /// One past the last covered slot (1..=96).
    pub end_slot: usize,
    /// Price in $/kWh.
    pub price: f64,
    pub label: TariffPeriod,
}

/// A validated set of bands covering every slot of the day exactly once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TariffBand>", into = "Vec<TariffBand>")]
pub struct TariffSchedule {
    bands: Vec<TariffBand>,
}

impl TryFrom<Vec<TariffBand>> for TariffSchedule {
    type Error = TariffError;
    fn try_from(bands: Vec<TariffBand>) -> Result<Self, TariffError> {
        TariffSchedule::new(bands)
    }
}

impl From<TariffSchedule> for Vec<TariffBand> {
    fn from(s: TariffSchedule) -> Self {
        s.bands
    }
}

impl TariffSchedule {
    /// Builds a schedule after checking that the bands partition [0,96)
    /// with no gap or overlap and that all prices are positive.
    pub fn new(mut bands: Vec<TariffBand>) -> Result<Self, TariffError> {
        for band in &bands {
            if band.start_slot >= band.end_slot || band.end_slot > SLOTS_PER_DAY {
                return Err(TariffError::InvalidBand {
                    start: band.start_slot,
                    end: band.end_slot,
                });
            }
            if band.price <= 0.0 {
                return Err(TariffError::NonPositivePrice(band.price));
            }
        }
        bands.sort_by_key(|b| b.start_slot);
        let mut next = 0usize;
        for band in &bands {
            if band.start_slot != next {
                return Err(TariffError::NotAPartition(next));
            }
            next = band.end_slot;
        }
        if next != SLOTS_PER_DAY {
            return Err(TariffError::NotAPartition(next));
        }
        Ok(Self { bands })
    }

    /// 2018 Austin TX rates: off-peak 00:00-06:00, mid-peak 06:00-14:00 and
    /// 22:00-24:00, on-peak 14:00-22:00. This is the default schedule.
    pub fn austin_2018() -> Self {
        Self::new(vec![
            band(0, 24, 0.01188, TariffPeriod::OffPeak),
            band(24, 56, 0.06218, TariffPeriod::MidPeak),
            band(56, 88, 0.11003, TariffPeriod::OnPeak),
            band(88, 96, 0.06218, TariffPeriod::MidPeak),
        ])
        .expect("built-in schedule is valid")
    }

    /// Variant layout with the late evening (22:00-24:00) in the off-peak
    /// band instead of mid-peak; prices are unchanged.
    pub fn austin_2018_late_off_peak() -> Self {
        Self::new(vec![
            band(0, 24, 0.01188, TariffPeriod::OffPeak),
            band(24, 56, 0.06218, TariffPeriod::MidPeak),
            band(56, 88, 0.11003, TariffPeriod::OnPeak),
            band(88, 96, 0.01188, TariffPeriod::OffPeak),
        ])
        .expect("built-in schedule is valid")
    }

    pub fn bands(&self) -> &[TariffBand] {
        &self.bands
    }

    /// Price ($/kWh) of the unique band containing `slot`.
    ///
    /// # Panics
    /// Panics if `slot >= 96`; slots are validated at episode construction.
    pub fn price_at(&self, slot: usize) -> f64 {
        assert!(slot < SLOTS_PER_DAY, "slot {slot} out of range");
        self.bands
            .iter()
            .find(|b| b.start_slot <= slot && slot < b.end_slot)
            .map(|b| b.price)
            .expect("bands partition the day")
    }

    /// Highest band price; used to scale the price feature into [0,1].
    pub fn max_price(&self) -> f64 {
        self.bands.iter().map(|b| b.price).fold(f64::MIN, f64::max)
    }
}

impl Default for TariffSchedule {
    fn default() -> Self {
        Self::austin_2018()
    }
}

fn band(start_slot: usize, end_slot: usize, price: f64, label: TariffPeriod) -> TariffBand {
    TariffBand {
        start_slot,
        end_slot,
        price,
        label,
    }
}

/// Grid-exchange cost ($) of one slot: `price * (a*p_ev + p_res - p_pv) / 4`.
///
/// The division by 4 converts average kW over the 15-minute slot to kWh.
/// Negative results are export credits under net metering.
pub fn step_cost(price: f64, charging: bool, p_ev: f64, p_res: f64, p_pv: f64) -> f64 {
    let a = if charging { 1.0 } else { 0.0 };
    price * (a * p_ev + p_res - p_pv) / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_prices() {
        let s = TariffSchedule::austin_2018();
        // 00:00 off-peak, 10:00 mid-peak, 15:00 on-peak, 22:30 mid-peak
        assert_eq!(s.price_at(0), 0.01188);
        assert_eq!(s.price_at(40), 0.06218);
        assert_eq!(s.price_at(60), 0.11003);
        assert_eq!(s.price_at(90), 0.06218);
        assert_eq!(s.max_price(), 0.11003);
    }

    #[test]
    fn late_off_peak_layout() {
        let s = TariffSchedule::austin_2018_late_off_peak();
        assert_eq!(s.price_at(90), 0.01188);
        assert_eq!(s.price_at(60), 0.11003);
    }

    #[test]
    fn rejects_gap_overlap_and_bad_price() {
        let gap = TariffSchedule::new(vec![
            band(0, 24, 0.01, TariffPeriod::OffPeak),
            band(30, 96, 0.06, TariffPeriod::MidPeak),
        ]);
        assert_eq!(gap.unwrap_err(), TariffError::NotAPartition(24));

        let overlap = TariffSchedule::new(vec![
            band(0, 40, 0.01, TariffPeriod::OffPeak),
            band(30, 96, 0.06, TariffPeriod::MidPeak),
        ]);
        assert_eq!(overlap.unwrap_err(), TariffError::NotAPartition(40));

        let short = TariffSchedule::new(vec![band(0, 90, 0.01, TariffPeriod::OffPeak)]);
        assert_eq!(short.unwrap_err(), TariffError::NotAPartition(90));

        let bad_price = TariffSchedule::new(vec![band(0, 96, 0.0, TariffPeriod::OffPeak)]);
        assert_eq!(bad_price.unwrap_err(), TariffError::NonPositivePrice(0.0));
    }

    #[test]
    fn step_cost_examples() {
        // hand arithmetic: 0.11003 * (3.3 + 1.0) / 4
        assert_eq!(step_cost(0.11003, true, 3.3, 1.0, 0.0), 0.11828225);
        // balanced exchange
        assert_eq!(step_cost(0.08, false, 5.0, 2.0, 2.0), 0.0);
        // export credit: 0.06218 * (0 + 1 - 3) / 4
        assert_eq!(step_cost(0.06218, false, 0.0, 1.0, 3.0), -0.03109);
    }

    #[test]
    fn step_cost_is_linear_in_powers() {
        let base = step_cost(0.05, true, 2.0, 1.0, 0.5);
        assert!((step_cost(0.05, true, 4.0, 2.0, 1.0) - 2.0 * base).abs() < 1e-15);
        // odd under (p_res - p_pv) sign flip with idle action
        let idle = step_cost(0.05, false, 0.0, 3.0, 1.0);
        let flipped = step_cost(0.05, false, 0.0, 1.0, 3.0);
        assert!((idle + flipped).abs() < 1e-15);
    }
}
