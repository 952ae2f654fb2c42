//! Multi-household community environment: N households stepped in
//! lockstep, sharing one PV series, each with its own battery state,
//! behavior statistics and reward stream.
//!
//! Every agent observes the shared PV and receives the solar bonus
//! whenever the shared panel generates; the cost sub-reward credits each
//! household an equal share of the shared generation.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::BatteryModel;
use crate::data::{DailyEpisode, SlotSeries};
use crate::env::{Action, Env, EnvConfig, EnvError, EnvState, StepOutcome};
use crate::stats::BehaviorStats;
use crate::tariff::TariffSchedule;
use crate::SLOTS_PER_DAY;

#[derive(Debug, Error, PartialEq)]
pub enum CommunityError {
    #[error("community episode needs at least one household")]
    Empty,
    #[error("episodes span different dates: {0} vs {1}")]
    MixedDates(NaiveDate, NaiveDate),
    #[error("expected {expected} items, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// One household's exogenous day within a community episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdDay {
    pub house_id: String,
    pub p_res: SlotSeries,
    pub p_ev: SlotSeries,
}

/// One day for the whole community; the shared PV series is the sum of
/// the member panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityEpisode {
    pub date: NaiveDate,
    pub weekday: u8,
    pub households: Vec<HouseholdDay>,
    pub p_pv_shared: SlotSeries,
}

impl CommunityEpisode {
    /// Builds a community day from per-house episodes of the same date,
    /// aggregating their PV production into the shared series.
    pub fn from_episodes(episodes: &[DailyEpisode]) -> Result<Self, CommunityError> {
        let first = episodes.first().ok_or(CommunityError::Empty)?;
        for ep in episodes {
            if ep.date != first.date {
                return Err(CommunityError::MixedDates(first.date, ep.date));
            }
        }
        let shared: Vec<f64> = (0..SLOTS_PER_DAY)
            .map(|t| episodes.iter().map(|ep| ep.p_pv[t]).sum())
            .collect();
        Ok(Self {
            date: first.date,
            weekday: first.weekday,
            households: episodes
                .iter()
                .map(|ep| HouseholdDay {
                    house_id: ep.house_id.clone(),
                    p_res: ep.p_res.clone(),
                    p_ev: ep.p_ev.clone(),
                })
                .collect(),
            p_pv_shared: SlotSeries::new(shared).expect("sum of valid series is valid"),
        })
    }

    pub fn household_count(&self) -> usize {
        self.households.len()
    }
}

/// How the shared PV is apportioned to households in the cost term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharePolicy {
    Equal,
}

/// Per-household share of the shared PV power at one slot.
pub fn pv_share(p_pv_shared: f64, _agent: usize, n_agents: usize, policy: SharePolicy) -> f64 {
    match policy {
        SharePolicy::Equal => p_pv_shared / n_agents as f64,
    }
}

/// N single-household environments advanced in lockstep.
pub struct CommunityEnv<'a> {
    agents: Vec<Env<'a>>,
}

impl<'a> CommunityEnv<'a> {
    /// One behavior-stats bundle per household, in episode order.
    pub fn new(
        episode: &CommunityEpisode,
        stats: &'a [BehaviorStats],
        config: &'a EnvConfig,
        battery: &'a BatteryModel,
        tariff: &TariffSchedule,
    ) -> Result<Self, CommunityError> {
        let n = episode.household_count();
        if n == 0 {
            return Err(CommunityError::Empty);
        }
        if stats.len() != n {
            return Err(CommunityError::WrongArity {
                expected: n,
                got: stats.len(),
            });
        }
        let shared = episode.p_pv_shared.to_vec();
        let mut agents = Vec::with_capacity(n);
        for (idx, house) in episode.households.iter().enumerate() {
            let cost_share: Vec<f64> = shared
                .iter()
                .map(|&pv| pv_share(pv, idx, n, SharePolicy::Equal))
                .collect();
            agents.push(Env::from_parts(
                episode.weekday as usize,
                house.p_res.to_vec(),
                shared.clone(),
                cost_share,
                house.p_ev.sum(),
                &stats[idx],
                config,
                battery,
                tariff,
            )?);
        }
        Ok(Self { agents })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, idx: usize) -> &Env<'a> {
        &self.agents[idx]
    }

    pub fn is_done(&self) -> bool {
        self.agents[0].is_done()
    }

    /// Rewinds every agent and returns their initial observations.
    pub fn reset(&mut self) -> Vec<EnvState> {
        self.agents.iter_mut().map(Env::reset).collect()
    }

    /// Advances all agents by one slot; each agent's battery and
    /// cumulative state evolve independently.
    pub fn step_all(&mut self, actions: &[Action]) -> Result<Vec<StepOutcome>, CommunityError> {
        if actions.len() != self.agents.len() {
            return Err(CommunityError::WrongArity {
                expected: self.agents.len(),
                got: actions.len(),
            });
        }
        self.agents
            .iter_mut()
            .zip(actions)
            .map(|(agent, &a)| agent.step(a).map_err(CommunityError::from))
            .collect()
    }
}
