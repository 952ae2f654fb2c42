//! Behavioral distributions that parameterize the rewards: per-weekday
//! charging-frequency profiles, the aggregate flexibility profile, and
//! average-cost profiles with their quantiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DailyEpisode;
use crate::tariff::{step_cost, TariffSchedule};
use crate::SLOTS_PER_DAY;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot build statistics from an empty episode list")]
    EmptyInput,
    #[error("quantile of an empty value list is undefined")]
    EmptyQuantileInput,
    #[error("quantile fraction must lie in [0,1], got {0}")]
    InvalidFraction(f64),
    #[error("all 96 average costs are negative; cost quantiles are undefined")]
    AllNegativeCosts,
}

/// Linear-interpolation quantile at rank `q * (n - 1)` over sorted values.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyQuantileInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::InvalidFraction(q));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Historical probability of EV charging at each slot, per weekday and
/// pooled over all days (the flexibility potential profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingFrequencyProfile {
    /// `per_weekday[wd][slot]` = fraction of weekday-`wd` episodes charging
    /// at `slot`; weekdays with no episodes stay at zero.
    pub per_weekday: Vec<Vec<f64>>,
    /// 25th percentile of each weekday's 96 slot frequencies.
    pub q25_per_weekday: Vec<f64>,
    /// Pooled frequency over all episodes.
    pub aggregate: Vec<f64>,
    pub aggregate_q25: f64,
}

/// Fraction of that weekday's episodes with `p_ev[slot] > on_threshold`.
pub fn build_charging_profile(
    episodes: &[DailyEpisode],
    on_threshold: f64,
) -> Result<ChargingFrequencyProfile, StatsError> {
    if episodes.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut counts = vec![vec![0usize; SLOTS_PER_DAY]; 7];
    let mut day_counts = vec![0usize; 7];
    for ep in episodes {
        let wd = ep.weekday as usize;
        day_counts[wd] += 1;
        for slot in 0..SLOTS_PER_DAY {
            if ep.p_ev[slot] > on_threshold {
                counts[wd][slot] += 1;
            }
        }
    }
    let per_weekday: Vec<Vec<f64>> = counts
        .iter()
        .zip(&day_counts)
        .map(|(slots, &days)| {
            slots
                .iter()
                .map(|&c| if days == 0 { 0.0 } else { c as f64 / days as f64 })
                .collect()
        })
        .collect();
    let q25_per_weekday = per_weekday
        .iter()
        .map(|f| quantile(f, 0.25))
        .collect::<Result<Vec<_>, _>>()?;
    let total_days: usize = day_counts.iter().sum();
    let aggregate: Vec<f64> = (0..SLOTS_PER_DAY)
        .map(|slot| {
            let c: usize = counts.iter().map(|wd| wd[slot]).sum();
            c as f64 / total_days as f64
        })
        .collect();
    let aggregate_q25 = quantile(&aggregate, 0.25)?;
    Ok(ChargingFrequencyProfile {
        per_weekday,
        q25_per_weekday,
        aggregate,
        aggregate_q25,
    })
}

/// Average historical grid-exchange cost per slot with its quantiles,
/// computed excluding negative slot averages (export-credit windows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub avg_cost: Vec<f64>,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

/// Mean historical cost per slot, replaying each episode's own charging
/// decisions (`p_ev[slot] > on_threshold`) through [`step_cost`].
pub fn build_cost_profile(
    episodes: &[DailyEpisode],
    schedule: &TariffSchedule,
    on_threshold: f64,
) -> Result<CostProfile, StatsError> {
    if episodes.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = episodes.len() as f64;
    let avg_cost: Vec<f64> = (0..SLOTS_PER_DAY)
        .map(|slot| {
            let price = schedule.price_at(slot);
            episodes
                .iter()
                .map(|ep| {
                    let charging = ep.p_ev[slot] > on_threshold;
                    step_cost(price, charging, ep.p_ev[slot], ep.p_res[slot], ep.p_pv[slot])
                })
                .sum::<f64>()
                / n
        })
        .collect();
    let non_negative: Vec<f64> = avg_cost.iter().copied().filter(|&c| c >= 0.0).collect();
    if non_negative.is_empty() {
        return Err(StatsError::AllNegativeCosts);
    }
    Ok(CostProfile {
        q25: quantile(&non_negative, 0.25)?,
        q50: quantile(&non_negative, 0.50)?,
        q75: quantile(&non_negative, 0.75)?,
        avg_cost,
    })
}

/// Everything the reward shaping needs about one house's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStats {
    pub freq: ChargingFrequencyProfile,
    pub cost: CostProfile,
    /// Quantiles of the aggregate flexibility profile, for the
    /// flexibility-potential reward ladder.
    pub flex_q25: f64,
    pub flex_q50: f64,
    pub flex_q75: f64,
}

impl BehaviorStats {
    pub fn build(
        episodes: &[DailyEpisode],
        schedule: &TariffSchedule,
        on_threshold: f64,
    ) -> Result<Self, StatsError> {
        let freq = build_charging_profile(episodes, on_threshold)?;
        let cost = build_cost_profile(episodes, schedule, on_threshold)?;
        let flex_q25 = freq.aggregate_q25;
        let flex_q50 = quantile(&freq.aggregate, 0.50)?;
        let flex_q75 = quantile(&freq.aggregate, 0.75)?;
        Ok(Self {
            freq,
            cost,
            flex_q25,
            flex_q50,
            flex_q75,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SlotSeries;
    use chrono::NaiveDate;

    fn episode_on(date: NaiveDate, ev: Vec<f64>) -> DailyEpisode {
        DailyEpisode::new(
            "h",
            date,
            SlotSeries::zeros(),
            SlotSeries::new(ev).unwrap(),
            SlotSeries::zeros(),
        )
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap(), 1.75);
        assert_eq!(quantile(&[5.0], 0.9).unwrap(), 5.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&[], 0.5).unwrap_err(), StatsError::EmptyQuantileInput);
        assert_eq!(
            quantile(&[1.0], 1.5).unwrap_err(),
            StatsError::InvalidFraction(1.5)
        );
    }

    #[test]
    fn all_zero_ev_gives_zero_profile() {
        let date = NaiveDate::from_ymd_opt(2018, 3, 5).unwrap();
        let eps = vec![episode_on(date, vec![0.0; 96])];
        let p = build_charging_profile(&eps, 0.1).unwrap();
        assert!(p.aggregate.iter().all(|&f| f == 0.0));
        assert_eq!(p.aggregate_q25, 0.0);
        assert!(p.q25_per_weekday.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn weekday_frequency_counts() {
        // two Monday episodes, one charging at slot 10
        let monday = NaiveDate::from_ymd_opt(2018, 3, 5).unwrap();
        let mut ev = vec![0.0; 96];
        ev[10] = 3.3;
        let eps = vec![
            episode_on(monday, ev),
            episode_on(monday + chrono::Duration::days(7), vec![0.0; 96]),
        ];
        let p = build_charging_profile(&eps, 0.1).unwrap();
        assert_eq!(p.per_weekday[0][10], 0.5);
        assert_eq!(p.per_weekday[0][11], 0.0);
        assert_eq!(p.per_weekday[1][10], 0.0);
        assert_eq!(p.aggregate[10], 0.5);
    }

    #[test]
    fn duplication_leaves_frequencies_unchanged() {
        let date = NaiveDate::from_ymd_opt(2018, 3, 7).unwrap();
        let mut ev = vec![0.0; 96];
        ev[30] = 3.3;
        ev[31] = 1.5;
        let one = vec![episode_on(date, ev)];
        let five: Vec<_> = std::iter::repeat(one[0].clone()).take(5).collect();
        let p1 = build_charging_profile(&one, 0.1).unwrap();
        let p5 = build_charging_profile(&five, 0.1).unwrap();
        assert_eq!(p1, p5);
    }

    #[test]
    fn aggregate_is_day_weighted_mean_of_weekdays() {
        let mut eps = Vec::new();
        for day in 0..21u64 {
            let date = NaiveDate::from_ymd_opt(2018, 3, 1).unwrap()
                + chrono::Duration::days(day as i64);
            let mut ev = vec![0.0; 96];
            if day % 3 == 0 {
                ev[(day % 96) as usize] = 3.3;
            }
            eps.push(episode_on(date, ev));
        }
        let p = build_charging_profile(&eps, 0.1).unwrap();
        let mut day_counts = [0usize; 7];
        for ep in &eps {
            day_counts[ep.weekday as usize] += 1;
        }
        let total: usize = day_counts.iter().sum();
        for slot in 0..SLOTS_PER_DAY {
            let weighted: f64 = (0..7)
                .map(|wd| p.per_weekday[wd][slot] * day_counts[wd] as f64)
                .sum::<f64>()
                / total as f64;
            assert!((p.aggregate[slot] - weighted).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_profile_zero_series() {
        let date = NaiveDate::from_ymd_opt(2018, 3, 5).unwrap();
        let eps = vec![episode_on(date, vec![0.0; 96])];
        let c = build_cost_profile(&eps, &TariffSchedule::austin_2018(), 0.1).unwrap();
        assert!(c.avg_cost.iter().all(|&v| v == 0.0));
        assert_eq!((c.q25, c.q50, c.q75), (0.0, 0.0, 0.0));
    }

    #[test]
    fn cost_profile_averages_and_negative_exclusion() {
        let date = NaiveDate::from_ymd_opt(2018, 3, 5).unwrap();
        // episode A exports heavily at slot 0; both episodes consume at slot 1
        let make = |res0: f64, pv0: f64, res1: f64| {
            let mut res = vec![0.0; 96];
            res[0] = res0;
            res[1] = res1;
            let mut pv = vec![0.0; 96];
            pv[0] = pv0;
            DailyEpisode::new(
                "h",
                date,
                SlotSeries::new(res).unwrap(),
                SlotSeries::zeros(),
                SlotSeries::new(pv).unwrap(),
            )
        };
        let eps = vec![make(0.0, 40.0, 10.0), make(0.0, 40.0, 30.0)];
        let c = build_cost_profile(&eps, &TariffSchedule::austin_2018(), 0.1).unwrap();
        // slot 0 average is negative and excluded from the quantiles
        assert!(c.avg_cost[0] < 0.0);
        // slot 1: mean of 0.01188*10/4 and 0.01188*30/4
        let expected = 0.01188 * (10.0 + 30.0) / 2.0 / 4.0;
        assert!((c.avg_cost[1] - expected).abs() < 1e-15);
        // quantiles are over the 95 non-negative entries; q75 of a list of
        // 94 zeros plus one positive is still 0
        assert_eq!(c.q25, 0.0);
        assert!(c.q75 >= c.q50 && c.q50 >= c.q25);
    }

    #[test]
    fn empty_inputs_error() {
        assert_eq!(
            build_charging_profile(&[], 0.1).unwrap_err(),
            StatsError::EmptyInput
        );
        assert_eq!(
            build_cost_profile(&[], &TariffSchedule::austin_2018(), 0.1).unwrap_err(),
            StatsError::EmptyInput
        );
    }
}
