//! Deterministic synthetic episode generator.
//!
//! Stands in for the proprietary smart-meter dataset: midday PV bumps,
//! morning/evening residual-load peaks and EV charging blocks at
//! weekday-dependent slots using the 3.3/1.5 kW charger levels. Output is
//! a pure function of (seed, parameters) and every generated day passes
//! the default eligibility bounds.

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DailyEpisode, DataError, SlotSeries};
use crate::SLOTS_PER_DAY;

/// Shape parameters for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthProfile {
    pub start_date: NaiveDate,
    /// PV is identically zero outside `[daylight_start, daylight_end)`.
    pub daylight_start: usize,
    pub daylight_end: usize,
    /// Per-house PV peak power range, kW.
    pub pv_peak_kw: (f64, f64),
    /// Per-house residual base-load range, kW.
    pub res_base_kw: (f64, f64),
    /// High-power (3.3 kW) charging block length range, slots.
    pub ev_block_slots: (usize, usize),
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(),
            daylight_start: 26, // 06:30
            daylight_end: 78,   // 19:30
            pv_peak_kw: (4.0, 7.0),
            res_base_kw: (0.2, 0.5),
            ev_block_slots: (3, 14),
        }
    }
}

impl SynthProfile {
    fn validate(&self) -> Result<(), DataError> {
        if self.daylight_start >= self.daylight_end || self.daylight_end > SLOTS_PER_DAY {
            return Err(DataError::InvalidSynthConfig(format!(
                "daylight window {}..{} is invalid",
                self.daylight_start, self.daylight_end
            )));
        }
        if !(self.pv_peak_kw.0 > 0.0 && self.pv_peak_kw.0 <= self.pv_peak_kw.1) {
            return Err(DataError::InvalidSynthConfig(
                "pv peak range must satisfy 0 < min <= max".into(),
            ));
        }
        if !(self.res_base_kw.0 >= 0.0 && self.res_base_kw.0 <= self.res_base_kw.1) {
            return Err(DataError::InvalidSynthConfig(
                "residual base range must satisfy 0 <= min <= max".into(),
            ));
        }
        // 2 slots at 3.3 kW clear the 4 kW-slot-sum eligibility floor; the
        // cap keeps block + tail below the 96 kW-slot-sum ceiling.
        if self.ev_block_slots.0 < 2
            || self.ev_block_slots.0 > self.ev_block_slots.1
            || self.ev_block_slots.1 > 28
        {
            return Err(DataError::InvalidSynthConfig(
                "ev block length must satisfy 2 <= min <= max <= 28".into(),
            ));
        }
        Ok(())
    }
}

/// Weekday-dependent preferred block starts: evening charging on workdays,
/// midday on weekends.
const WEEKDAY_START_SLOT: [i64; 7] = [70, 71, 70, 72, 69, 44, 40];

/// Generates `n_houses * n_days` episodes, deterministically for a fixed
/// seed. House ids are `synth-000`, `synth-001`, ...
pub fn synth_generate(
    seed: u64,
    n_houses: usize,
    n_days: usize,
    profile: &SynthProfile,
) -> Result<Vec<DailyEpisode>, DataError> {
    if n_houses == 0 || n_days == 0 {
        return Err(DataError::InvalidSynthConfig(
            "n_houses and n_days must be >= 1".into(),
        ));
    }
    profile.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episodes = Vec::with_capacity(n_houses * n_days);
    for house in 0..n_houses {
        let house_id = format!("synth-{house:03}");
        let pv_peak = rng.random_range(profile.pv_peak_kw.0..=profile.pv_peak_kw.1);
        let res_base = rng.random_range(profile.res_base_kw.0..=profile.res_base_kw.1);
        let morning_amp = rng.random_range(0.6..1.5);
        let evening_amp = rng.random_range(1.0..2.2);
        let start_jitter: i64 = rng.random_range(-4..=4);

        for day in 0..n_days {
            let date = profile.start_date + Duration::days(day as i64);
            let weekday = chrono::Datelike::weekday(&date).num_days_from_monday() as usize;

            let cloud = rng.random_range(0.55..1.0);
            let span = (profile.daylight_end - profile.daylight_start) as f64;
            let mut p_pv = vec![0.0; SLOTS_PER_DAY];
            for (t, pv) in p_pv.iter_mut().enumerate() {
                let noise = rng.random_range(0.9..1.1);
                if t >= profile.daylight_start && t < profile.daylight_end {
                    let x = (t - profile.daylight_start) as f64 / span;
                    let bell = (std::f64::consts::PI * x).sin().powi(2);
                    *pv = pv_peak * cloud * bell * noise;
                }
            }

            let mut p_res = vec![0.0; SLOTS_PER_DAY];
            for (t, res) in p_res.iter_mut().enumerate() {
                let bump = |center: f64, width: f64| {
                    let d = (t as f64 - center) / width;
                    (-0.5 * d * d).exp()
                };
                *res = res_base
                    + morning_amp * bump(30.0, 5.0)
                    + evening_amp * bump(76.0, 7.0)
                    + rng.random_range(0.0..0.08);
            }

            let block_len =
                rng.random_range(profile.ev_block_slots.0..=profile.ev_block_slots.1);
            let day_jitter: i64 = rng.random_range(-3..=3);
            let tail_len: usize = rng.random_range(0..=2);
            let start = (WEEKDAY_START_SLOT[weekday] + start_jitter + day_jitter)
                .clamp(0, (SLOTS_PER_DAY - block_len - tail_len) as i64)
                as usize;
            let mut p_ev = vec![0.0; SLOTS_PER_DAY];
            for slot in p_ev.iter_mut().skip(start).take(block_len) {
                *slot = 3.3;
            }
            for slot in p_ev.iter_mut().skip(start + block_len).take(tail_len) {
                *slot = 1.5;
            }

            episodes.push(DailyEpisode::new(
                house_id.clone(),
                date,
                SlotSeries::new(p_res).expect("generated residual load is valid"),
                SlotSeries::new(p_ev).expect("generated EV load is valid"),
                SlotSeries::new(p_pv).expect("generated PV is valid"),
            ));
        }
    }
    Ok(episodes)
}
