//! Single-household episodic RL environment.
//!
//! One episode covers 96 slots of one day. The agent picks charge/idle per
//! slot; exogenous data (residual load, PV, prices) come from the episode,
//! the controllable state is (SoC, cumulative EV load). Rewards are shaped
//! from five sub-terms: consumption matching, charging-habit fit,
//! electricity cost, battery protection and solar self-consumption.
//!
//! Two reward variants are provided:
//! - [`RewardVariant::Solar`]: a standalone solar bonus, a low-frequency
//!   charging penalty against the weekday profile, and cyclic time
//!   features (the default),
//! - [`RewardVariant::Flex`]: the solar bonus folded into the consumption
//!   term, a graded ladder over the aggregate flexibility profile, and a
//!   raw time-index feature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::BatteryModel;
use crate::data::{DailyEpisode, SlotSeries};
use crate::stats::BehaviorStats;
use crate::tariff::{step_cost, TariffSchedule};
use crate::SLOTS_PER_DAY;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("episode's daily EV load exceeds one full charging cycle")]
    OverCapacityEpisode,
    #[error("episode has no historical EV load; the load target is undefined")]
    EmptyChargingTarget,
    #[error("step called after the episode finished")]
    EpisodeDone,
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// Charge or stay idle; the entire action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Idle,
    Charge,
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Idle => 0,
            Action::Charge => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Action> {
        match index {
            0 => Some(Action::Idle),
            1 => Some(Action::Charge),
            _ => None,
        }
    }

    pub fn is_charge(self) -> bool {
        self == Action::Charge
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardVariant {
    /// Standalone solar bonus, per-weekday habit penalty, sin/cos time.
    Solar,
    /// Solar bonus inside the consumption term, aggregate flexibility
    /// ladder, raw time index.
    Flex,
}

/// Min-max scaling bounds for the power and price features. SoC and the
/// cumulative-load fraction are already in [0,1] and stay unscaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureScaling {
    pub p_res_max: f64,
    pub p_pv_max: f64,
    pub price_max: f64,
}

impl Default for FeatureScaling {
    fn default() -> Self {
        Self {
            p_res_max: 1.0,
            p_pv_max: 1.0,
            price_max: 1.0,
        }
    }
}

impl FeatureScaling {
    /// Derives scaling bounds from a training set: per-house maxima for the
    /// power features and the top tariff price.
    pub fn from_episodes(episodes: &[DailyEpisode], tariff: &TariffSchedule) -> Self {
        let max_of = |pick: fn(&DailyEpisode) -> &SlotSeries| {
            episodes
                .iter()
                .flat_map(|ep| pick(ep).iter().copied())
                .fold(0.0f64, f64::max)
                .max(1e-9)
        };
        Self {
            p_res_max: max_of(|ep| &ep.p_res),
            p_pv_max: max_of(|ep| &ep.p_pv),
            price_max: tariff.max_price(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub reward_variant: RewardVariant,
    /// Acceptable deviation of the scheduled daily load from the target.
    pub tolerance: f64,
    /// Weights of (consumption, habit, cost, soc, solar) sub-rewards.
    pub reward_weights: [f64; 5],
    /// Power level above which a historical reading counts as charging.
    pub on_threshold: f64,
    /// Episode length; 96 except for truncated exact-solver cross-checks.
    pub horizon: usize,
    pub scaling: FeatureScaling,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            reward_variant: RewardVariant::Solar,
            tolerance: 0.05,
            reward_weights: [1.0; 5],
            on_threshold: 0.1,
            horizon: SLOTS_PER_DAY,
            scaling: FeatureScaling::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.tolerance > 0.0) {
            return Err(EnvError::InvalidConfig(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.reward_weights.iter().any(|w| !w.is_finite()) {
            return Err(EnvError::InvalidConfig("reward weights must be finite".into()));
        }
        if self.horizon == 0 || self.horizon > SLOTS_PER_DAY {
            return Err(EnvError::InvalidConfig(format!(
                "horizon must lie in [1,{SLOTS_PER_DAY}], got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Observation handed to the agent at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub slot: usize,
    pub p_res: f64,
    pub p_pv: f64,
    pub soc: f64,
    pub p_ev_cum: f64,
    pub price: f64,
    pub time_enc: (f64, f64),
}

/// The five named sub-rewards of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub consumption: f64,
    pub habit: f64,
    pub cost: f64,
    pub soc: f64,
    pub solar: f64,
}

impl RewardBreakdown {
    pub fn as_array(&self) -> [f64; 5] {
        [self.consumption, self.habit, self.cost, self.soc, self.solar]
    }

    pub fn weighted_total(&self, weights: &[f64; 5]) -> f64 {
        self.as_array()
            .iter()
            .zip(weights)
            .map(|(r, w)| w * r)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// `None` once the episode terminated.
    pub next_state: Option<EnvState>,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub done: bool,
    pub delivered_kw: f64,
}

/// Dynamics and reward of a single slot evaluated at an arbitrary
/// controllable state; shared by the environment and the exact solvers so
/// both see bit-identical rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotStep {
    pub delivered_kw: f64,
    pub new_soc: f64,
    pub new_cum: f64,
    pub violated: bool,
    pub breakdown: RewardBreakdown,
    pub reward: f64,
}

#[derive(Debug)]
pub struct Env<'a> {
    p_res: Vec<f64>,
    /// PV as observed by the agent and by the solar bonus.
    pv_state: Vec<f64>,
    /// PV credited against this household in the cost term (differs from
    /// `pv_state` only for community members sharing one panel).
    pv_cost: Vec<f64>,
    prices: Vec<f64>,
    weekday: usize,
    target: f64,
    initial_soc: f64,
    stats: &'a BehaviorStats,
    config: &'a EnvConfig,
    battery: &'a BatteryModel,
    slot: usize,
    soc: f64,
    cum: f64,
    done: bool,
}

impl<'a> Env<'a> {
    pub fn new(
        episode: &DailyEpisode,
        stats: &'a BehaviorStats,
        config: &'a EnvConfig,
        battery: &'a BatteryModel,
        tariff: &TariffSchedule,
    ) -> Result<Self, EnvError> {
        Self::from_parts(
            episode.weekday as usize,
            episode.p_res.to_vec(),
            episode.p_pv.to_vec(),
            episode.p_pv.to_vec(),
            episode.ev_sum(),
            stats,
            config,
            battery,
            tariff,
        )
    }

    /// Builds an environment from raw series; used directly by the
    /// community wrapper, which feeds shared PV into `pv_state` and the
    /// household's PV share into `pv_cost`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        weekday: usize,
        p_res: Vec<f64>,
        pv_state: Vec<f64>,
        pv_cost: Vec<f64>,
        target: f64,
        stats: &'a BehaviorStats,
        config: &'a EnvConfig,
        battery: &'a BatteryModel,
        tariff: &TariffSchedule,
    ) -> Result<Self, EnvError> {
        config.validate()?;
        if target <= 0.0 {
            return Err(EnvError::EmptyChargingTarget);
        }
        let initial = battery.initial_soc(target);
        if initial.over_capacity {
            return Err(EnvError::OverCapacityEpisode);
        }
        let prices = (0..SLOTS_PER_DAY).map(|s| tariff.price_at(s)).collect();
        let mut env = Self {
            p_res,
            pv_state,
            pv_cost,
            prices,
            weekday,
            target,
            initial_soc: initial.soc,
            stats,
            config,
            battery,
            slot: 0,
            soc: initial.soc,
            cum: 0.0,
            done: false,
        };
        env.reset();
        Ok(env)
    }

    /// Rewinds to slot 0 and returns the initial observation.
    pub fn reset(&mut self) -> EnvState {
        self.slot = 0;
        self.soc = self.initial_soc;
        self.cum = 0.0;
        self.done = false;
        self.state()
    }

    /// Observation for the current slot.
    pub fn state(&self) -> EnvState {
        let slot = self.slot;
        let angle = 2.0 * std::f64::consts::PI * slot as f64 / SLOTS_PER_DAY as f64;
        EnvState {
            slot,
            p_res: self.p_res[slot],
            p_pv: self.pv_state[slot],
            soc: self.soc,
            p_ev_cum: self.cum,
            price: self.prices[slot],
            time_enc: (angle.sin(), angle.cos()),
        }
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn config(&self) -> &EnvConfig {
        self.config
    }

    pub fn battery(&self) -> &BatteryModel {
        self.battery
    }

    /// Initial (SoC, cumulative load) of the episode, independent of the
    /// cursor position.
    pub fn reset_point(&self) -> (f64, f64) {
        (self.initial_soc, 0.0)
    }

    /// Number of features produced by [`Env::features`].
    pub fn feature_len(&self) -> usize {
        match self.config.reward_variant {
            RewardVariant::Solar => 7,
            RewardVariant::Flex => 6,
        }
    }

    /// Scaled feature vector for the learner. Power and price features are
    /// min-max scaled, SoC and the cumulative fraction are already in
    /// [0,1], the time encoding stays in [-1,1].
    pub fn features(&self, state: &EnvState) -> Vec<f64> {
        let s = &self.config.scaling;
        let base = [
            state.p_res / s.p_res_max,
            state.p_pv / s.p_pv_max,
            state.soc,
            state.p_ev_cum / self.target,
            state.price / s.price_max,
        ];
        match self.config.reward_variant {
            RewardVariant::Solar => {
                let mut v = base.to_vec();
                v.push(state.time_enc.0);
                v.push(state.time_enc.1);
                v
            }
            RewardVariant::Flex => {
                let mut v = base.to_vec();
                v.push(state.slot as f64 / (SLOTS_PER_DAY - 1) as f64);
                v
            }
        }
    }

    /// Evaluates one slot at an arbitrary controllable state without
    /// advancing the episode cursor.
    pub fn transition_at(&self, slot: usize, soc: f64, cum: f64, action: Action) -> SlotStep {
        let charging = action.is_charge();
        let (delivered, new_soc, violated) = if charging {
            let p = self.battery.charge_power(soc);
            let up = self.battery.apply_charge(soc, p);
            (p, up.soc, up.violated)
        } else {
            (0.0, soc, false)
        };
        let new_cum = cum + delivered;
        let price = self.prices[slot];
        let cost = step_cost(price, charging, delivered, self.p_res[slot], self.pv_cost[slot]);
        let stats = self.stats;
        let breakdown = match self.config.reward_variant {
            RewardVariant::Solar => RewardBreakdown {
                consumption: reward_consumption(charging, new_cum, self.target, self.config.tolerance),
                habit: reward_habit(
                    charging,
                    stats.freq.per_weekday[self.weekday][slot],
                    stats.freq.q25_per_weekday[self.weekday],
                ),
                cost: reward_cost_ladder(charging, cost, stats.cost.q25, stats.cost.q50, stats.cost.q75),
                soc: reward_soc_guard(charging, violated),
                solar: reward_solar(charging, self.pv_state[slot]),
            },
            RewardVariant::Flex => RewardBreakdown {
                consumption: reward_consumption_solar(
                    charging,
                    self.pv_state[slot],
                    new_cum,
                    self.target,
                    self.config.tolerance,
                ),
                habit: reward_flex_ladder(
                    charging,
                    stats.freq.aggregate[slot],
                    stats.flex_q25,
                    stats.flex_q50,
                    stats.flex_q75,
                ),
                cost: reward_cost_ladder(charging, cost, stats.cost.q25, stats.cost.q50, stats.cost.q75),
                soc: reward_soc_guard(charging, violated),
                solar: 0.0,
            },
        };
        SlotStep {
            delivered_kw: delivered,
            new_soc,
            new_cum,
            violated,
            reward: breakdown.weighted_total(&self.config.reward_weights),
            breakdown,
        }
    }

    /// Applies the action for the current slot and advances the episode.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let step = self.transition_at(self.slot, self.soc, self.cum, action);
        self.soc = step.new_soc;
        self.cum = step.new_cum;
        self.slot += 1;
        self.done = self.slot >= self.config.horizon;
        Ok(StepOutcome {
            next_state: if self.done { None } else { Some(self.state()) },
            reward: step.reward,
            breakdown: step.breakdown,
            done: self.done,
            delivered_kw: step.delivered_kw,
        })
    }
}

/// +1 for charging while the cumulative load (after the action) is within
/// the overshoot bound, -10 for charging past it, -0.25 for idling while
/// the bound has room, 0 for idling past it.
pub fn reward_consumption(charging: bool, cum_after: f64, target: f64, tolerance: f64) -> f64 {
    let within = cum_after / target <= 1.0 + tolerance;
    match (charging, within) {
        (true, true) => 1.0,
        (true, false) => -10.0,
        (false, true) => -0.25,
        (false, false) => 0.0,
    }
}

/// Variant with the solar bonus folded in: +3/+2 for charging under the
/// bound with/without PV, otherwise as [`reward_consumption`].
pub fn reward_consumption_solar(
    charging: bool,
    p_pv: f64,
    cum_after: f64,
    target: f64,
    tolerance: f64,
) -> f64 {
    let within = cum_after / target <= 1.0 + tolerance;
    match (charging, within) {
        (true, true) => {
            if p_pv > 0.0 {
                3.0
            } else {
                2.0
            }
        }
        (true, false) => -10.0,
        (false, true) => -0.25,
        (false, false) => 0.0,
    }
}

/// -2 for charging at a slot whose historical charging frequency is
/// strictly below the 25th percentile of the profile.
pub fn reward_habit(charging: bool, freq: f64, q25: f64) -> f64 {
    if charging && freq < q25 {
        -2.0
    } else {
        0.0
    }
}

/// Graded ladder over the flexibility potential: charging at
/// low-flexibility slots is penalized, at high-flexibility slots rewarded.
pub fn reward_flex_ladder(charging: bool, u_flex: f64, q25: f64, q50: f64, q75: f64) -> f64 {
    if !charging {
        0.0
    } else if u_flex <= q25 {
        -2.0
    } else if u_flex <= q50 {
        -1.0
    } else if u_flex <= q75 {
        1.0
    } else {
        2.0
    }
}

/// Graded ladder over the cost profile quantiles: cheap slots are
/// rewarded, expensive ones penalized; idling is neutral.
pub fn reward_cost_ladder(charging: bool, cost: f64, q25: f64, q50: f64, q75: f64) -> f64 {
    if !charging {
        0.0
    } else if cost <= q25 {
        2.0
    } else if cost <= q50 {
        1.0
    } else if cost <= q75 {
        -1.0
    } else {
        -2.0
    }
}

/// +2 for charging while the PV generates.
pub fn reward_solar(charging: bool, p_pv: f64) -> f64 {
    if charging && p_pv > 0.0 {
        2.0
    } else {
        0.0
    }
}

/// -10 for a charge that would push the SoC past its ceiling.
pub fn reward_soc_guard(charging: bool, violated: bool) -> f64 {
    if charging && violated {
        -10.0
    } else {
        0.0
    }
}

/// Whether the scheduled daily load landed within the tolerance band of
/// the historical target.
pub fn check_load_match(cum_final: f64, target: f64, tolerance: f64) -> bool {
    let ratio = cum_final / target;
    (1.0 - tolerance..=1.0 + tolerance).contains(&ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SlotSeries;
    use chrono::NaiveDate;

    fn fixture_episode(ev_per_slot: f64) -> DailyEpisode {
        let mut pv = vec![0.0; SLOTS_PER_DAY];
        for (t, v) in pv.iter_mut().enumerate().take(70).skip(30) {
            *v = 3.0 + (t % 5) as f64 * 0.1;
        }
        DailyEpisode::new(
            "h",
            NaiveDate::from_ymd_opt(2018, 6, 4).unwrap(),
            SlotSeries::new(vec![0.4; SLOTS_PER_DAY]).unwrap(),
            SlotSeries::new(vec![ev_per_slot; SLOTS_PER_DAY]).unwrap(),
            SlotSeries::new(pv).unwrap(),
        )
    }

    fn fixture_stats(episode: &DailyEpisode) -> BehaviorStats {
        BehaviorStats::build(
            std::slice::from_ref(episode),
            &TariffSchedule::austin_2018(),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn reset_state() {
        let ep = fixture_episode(0.5); // ev sum 48
        let stats = fixture_stats(&ep);
        let config = EnvConfig::default();
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        let s = env.reset();
        assert_eq!(s.slot, 0);
        assert_eq!(s.soc, 0.5475);
        assert_eq!(s.p_ev_cum, 0.0);
        assert_eq!(s.time_enc, (0.0, 1.0));
        assert_eq!(s.price, 0.01188);
    }

    #[test]
    fn zero_target_episode_is_rejected() {
        let ep = fixture_episode(0.0);
        let stats = fixture_stats(&fixture_episode(0.5));
        let config = EnvConfig::default();
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        assert_eq!(
            Env::new(&ep, &stats, &config, &battery, &tariff).unwrap_err(),
            EnvError::EmptyChargingTarget
        );
    }

    #[test]
    fn step_semantics_and_lifecycle() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let config = EnvConfig::default();
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();

        let out = env.step(Action::Idle).unwrap();
        assert_eq!(out.delivered_kw, 0.0);
        assert_eq!(out.next_state.unwrap().soc, 0.5475);

        let out = env.step(Action::Charge).unwrap();
        assert_eq!(out.delivered_kw, 3.3);
        assert!(out.next_state.unwrap().p_ev_cum == 3.3);

        env.reset();
        let mut last = None;
        for _ in 0..SLOTS_PER_DAY {
            last = Some(env.step(Action::Idle).unwrap());
        }
        let last = last.unwrap();
        assert!(last.done);
        assert!(last.next_state.is_none());
        assert_eq!(env.step(Action::Idle).unwrap_err(), EnvError::EpisodeDone);
    }

    #[test]
    fn full_idle_episode_accumulates_nothing() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let config = EnvConfig::default();
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        for _ in 0..SLOTS_PER_DAY - 1 {
            env.step(Action::Idle).unwrap();
        }
        let out = env.step(Action::Idle).unwrap();
        assert!(out.done);
        assert_eq!(env.state().p_ev_cum, 0.0);
    }

    #[test]
    fn reward_equals_weighted_breakdown() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let mut config = EnvConfig::default();
        config.reward_weights = [0.5, 2.0, 1.5, 1.0, 0.25];
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        for t in 0..SLOTS_PER_DAY {
            let action = if t % 3 == 0 { Action::Charge } else { Action::Idle };
            let out = env.step(action).unwrap();
            let expected = out.breakdown.weighted_total(&config.reward_weights);
            assert!((out.reward - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_replay() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let config = EnvConfig::default();
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let run = || {
            let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
            (0..SLOTS_PER_DAY)
                .map(|t| {
                    let a = if t % 4 == 1 { Action::Charge } else { Action::Idle };
                    env.step(a).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn cumulative_load_equals_delivered_sum() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let config = EnvConfig::default();
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        let mut delivered = 0.0;
        for t in 0..SLOTS_PER_DAY {
            let a = if t % 2 == 0 { Action::Charge } else { Action::Idle };
            delivered += env.step(a).unwrap().delivered_kw;
        }
        assert_eq!(env.state().p_ev_cum, delivered);
    }

    #[test]
    fn consumption_reward_branches() {
        assert_eq!(reward_consumption(true, 20.0, 48.0, 0.05), 1.0);
        assert_eq!(reward_consumption(true, 51.0, 48.0, 0.05), -10.0);
        assert_eq!(reward_consumption(false, 20.0, 48.0, 0.05), -0.25);
        assert_eq!(reward_consumption(false, 51.0, 48.0, 0.05), 0.0);
        // the overshoot bound itself is within (exactly representable here)
        assert_eq!(reward_consumption(true, 5.0, 4.0, 0.25), 1.0);
    }

    #[test]
    fn habit_reward_branches() {
        assert_eq!(reward_habit(true, 0.01, 0.10), -2.0);
        assert_eq!(reward_habit(false, 0.01, 0.10), 0.0);
        // strict inequality at the quantile
        assert_eq!(reward_habit(true, 0.10, 0.10), 0.0);
    }

    #[test]
    fn cost_reward_branches() {
        let (q25, q50, q75) = (0.02, 0.05, 0.10);
        assert_eq!(reward_cost_ladder(true, 0.01, q25, q50, q75), 2.0);
        assert_eq!(reward_cost_ladder(true, 0.03, q25, q50, q75), 1.0);
        assert_eq!(reward_cost_ladder(true, 0.07, q25, q50, q75), -1.0);
        assert_eq!(reward_cost_ladder(true, 0.20, q25, q50, q75), -2.0);
        assert_eq!(reward_cost_ladder(false, 0.20, q25, q50, q75), 0.0);
        // ties take the better branch
        assert_eq!(reward_cost_ladder(true, q25, q25, q50, q75), 2.0);
        assert_eq!(reward_cost_ladder(true, q50, q25, q50, q75), 1.0);
        assert_eq!(reward_cost_ladder(true, q75, q25, q50, q75), -1.0);
    }

    #[test]
    fn solar_and_soc_rewards() {
        assert_eq!(reward_solar(true, 2.5), 2.0);
        assert_eq!(reward_solar(true, 0.0), 0.0);
        assert_eq!(reward_solar(false, 2.5), 0.0);
        assert_eq!(reward_soc_guard(true, true), -10.0);
        assert_eq!(reward_soc_guard(true, false), 0.0);
        assert_eq!(reward_soc_guard(false, true), 0.0);
    }

    #[test]
    fn flex_ladder_branches() {
        let (q25, q50, q75) = (0.1, 0.3, 0.6);
        assert_eq!(reward_flex_ladder(true, 0.9, q25, q50, q75), 2.0);
        assert_eq!(reward_flex_ladder(true, 0.05, q25, q50, q75), -2.0);
        assert_eq!(reward_flex_ladder(true, 0.2, q25, q50, q75), -1.0);
        assert_eq!(reward_flex_ladder(true, 0.5, q25, q50, q75), 1.0);
        assert_eq!(reward_flex_ladder(false, 0.9, q25, q50, q75), 0.0);
        assert_eq!(reward_flex_ladder(true, q25, q25, q50, q75), -2.0);
    }

    #[test]
    fn consumption_solar_variant_branches() {
        assert_eq!(reward_consumption_solar(true, 2.0, 20.0, 48.0, 0.05), 3.0);
        assert_eq!(reward_consumption_solar(true, 0.0, 20.0, 48.0, 0.05), 2.0);
        assert_eq!(reward_consumption_solar(true, 2.0, 51.0, 48.0, 0.05), -10.0);
        assert_eq!(reward_consumption_solar(false, 2.0, 20.0, 48.0, 0.05), -0.25);
        assert_eq!(reward_consumption_solar(false, 0.0, 51.0, 48.0, 0.05), 0.0);
    }

    #[test]
    fn load_match_band() {
        assert!(check_load_match(48.0, 48.0, 0.05));
        assert!(check_load_match(45.6, 48.0, 0.05));
        assert!(check_load_match(50.4, 48.0, 0.05));
        assert!(!check_load_match(40.0, 48.0, 0.05));
        assert!(!check_load_match(51.0, 48.0, 0.05));
    }

    #[test]
    fn flex_variant_sums_four_terms() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let mut config = EnvConfig::default();
        config.reward_variant = RewardVariant::Flex;
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();
        let mut env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        for t in 0..SLOTS_PER_DAY {
            let a = if t % 5 == 0 { Action::Charge } else { Action::Idle };
            let out = env.step(a).unwrap();
            assert_eq!(out.breakdown.solar, 0.0);
            let four = out.breakdown.consumption
                + out.breakdown.habit
                + out.breakdown.cost
                + out.breakdown.soc;
            assert!((out.reward - four).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_vectors() {
        let ep = fixture_episode(0.5);
        let stats = fixture_stats(&ep);
        let battery = BatteryModel::default();
        let tariff = TariffSchedule::austin_2018();

        let mut config = EnvConfig::default();
        config.scaling = FeatureScaling::from_episodes(std::slice::from_ref(&ep), &tariff);
        let env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        assert_eq!(env.feature_len(), 7);
        let f = env.features(&env.state());
        assert_eq!(f.len(), 7);
        assert!(f[0] <= 1.0 && f[4] <= 1.0);
        // time encoding stays on the unit circle
        assert!((f[5] * f[5] + f[6] * f[6] - 1.0).abs() < 1e-12);

        let mut config = EnvConfig::default();
        config.reward_variant = RewardVariant::Flex;
        let env = Env::new(&ep, &stats, &config, &battery, &tariff).unwrap();
        assert_eq!(env.feature_len(), 6);
        assert_eq!(env.features(&env.state())[5], 0.0);
    }
}
