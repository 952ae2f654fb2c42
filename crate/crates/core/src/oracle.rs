//! Exact and baseline references for the environment.
//!
//! The environment's controllable state after k charge actions is fully
//! determined by k: charging only ever raises the SoC, so the sequence of
//! delivered powers (3.3 kW until the switch point, 1.5 kW after) is the
//! same along every trajectory, whatever idle slots are interleaved. The
//! dynamic program therefore runs over (slot, charges-so-far) and is exact.
//! A brute-force enumerator over short horizons and an uncontrolled
//! (historical) replay complete the reference set.

use thiserror::Error;

use crate::data::SlotSeries;
use crate::env::{Action, Env, EnvError, RewardBreakdown};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("brute force refused: horizon {0} exceeds the limit of {MAX_BRUTE_FORCE_HORIZON}")]
    HorizonTooLong(usize),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Exhaustive enumeration is capped at 2^14 schedules.
pub const MAX_BRUTE_FORCE_HORIZON: usize = 14;

/// A point of the charge chain: the number of high- and low-power charges
/// taken so far, which pins down SoC and cumulative load exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpState {
    pub n_high: usize,
    pub n_low: usize,
}

/// Optimal discounted return and a schedule achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSchedule {
    pub return_value: f64,
    pub actions: Vec<Action>,
}

/// Precomputed controllable-state chain: entry k describes the state
/// after k charge actions.
struct ChargeChain {
    soc: Vec<f64>,
    cum: Vec<f64>,
    counts: Vec<DpState>,
}

impl ChargeChain {
    fn build(env: &Env, length: usize) -> Self {
        let battery = env.battery();
        let mut soc = Vec::with_capacity(length + 1);
        let mut cum = Vec::with_capacity(length + 1);
        let mut counts = Vec::with_capacity(length + 1);
        let mut state = env.reset_point();
        soc.push(state.0);
        cum.push(state.1);
        counts.push(DpState { n_high: 0, n_low: 0 });
        for k in 0..length {
            let power = battery.charge_power(state.0);
            let update = battery.apply_charge(state.0, power);
            state = (update.soc, state.1 + power);
            soc.push(state.0);
            cum.push(state.1);
            let prev = counts[k];
            counts.push(if power == battery.p_high {
                DpState {
                    n_high: prev.n_high + 1,
                    n_low: prev.n_low,
                }
            } else {
                DpState {
                    n_high: prev.n_high,
                    n_low: prev.n_low + 1,
                }
            });
        }
        Self { soc, cum, counts }
    }
}

/// Exact optimum via backward induction over (slot, charge count). Ties
/// break toward idling, which makes the returned schedule the
/// lexicographically smallest optimal one.
pub fn dp_optimal(env: &Env, gamma: f64) -> OptimalSchedule {
    let horizon = env.horizon();
    let chain = ChargeChain::build(env, horizon);

    // value[k] holds V_{t+1}(k); policy[t][k] the greedy action at (t, k)
    let mut value = vec![0.0f64; horizon + 1];
    let mut policy = vec![vec![false; horizon + 1]; horizon];
    for t in (0..horizon).rev() {
        let mut next = vec![0.0f64; horizon + 1];
        for k in (0..=t).rev() {
            let idle = env.transition_at(t, chain.soc[k], chain.cum[k], Action::Idle);
            let charge = env.transition_at(t, chain.soc[k], chain.cum[k], Action::Charge);
            let v_idle = idle.reward + gamma * value[k];
            let v_charge = charge.reward + gamma * value[k + 1];
            if v_charge > v_idle {
                next[k] = v_charge;
                policy[t][k] = true;
            } else {
                next[k] = v_idle;
            }
        }
        value = next;
    }

    let mut actions = Vec::with_capacity(horizon);
    let mut k = 0usize;
    for row in &policy {
        if row[k] {
            actions.push(Action::Charge);
            k += 1;
        } else {
            actions.push(Action::Idle);
        }
    }
    debug_assert_eq!(chain.counts[k].n_high + chain.counts[k].n_low, k);
    OptimalSchedule {
        return_value: value[0],
        actions,
    }
}

/// Exhaustive search over all 2^T schedules, replayed through the
/// environment. Schedules are visited in lexicographic order with idle
/// first, so exact ties resolve to the same schedule as [`dp_optimal`].
pub fn brute_force(env: &mut Env, gamma: f64) -> Result<OptimalSchedule, OracleError> {
    let horizon = env.horizon();
    if horizon > MAX_BRUTE_FORCE_HORIZON {
        return Err(OracleError::HorizonTooLong(horizon));
    }
    let mut best: Option<OptimalSchedule> = None;
    for mask in 0u32..(1 << horizon) {
        let actions: Vec<Action> = (0..horizon)
            .map(|t| {
                if mask >> (horizon - 1 - t) & 1 == 1 {
                    Action::Charge
                } else {
                    Action::Idle
                }
            })
            .collect();
        let replay = replay_schedule(env, &actions)?;
        let ret = discounted_return(&replay.rewards, gamma);
        let better = match &best {
            None => true,
            Some(b) => ret > b.return_value,
        };
        if better {
            best = Some(OptimalSchedule {
                return_value: ret,
                actions,
            });
        }
    }
    Ok(best.expect("at least the all-idle schedule was evaluated"))
}

/// Full trace of replaying a fixed schedule through the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub breakdowns: Vec<RewardBreakdown>,
    pub delivered_kw: Vec<f64>,
    /// Undiscounted sum of the per-step rewards.
    pub return_sum: f64,
    /// Cumulative scheduled EV load at the end of the episode.
    pub final_cum: f64,
}

/// Resets the environment and replays `actions` through it.
pub fn replay_schedule(env: &mut Env, actions: &[Action]) -> Result<Replay, EnvError> {
    env.reset();
    let mut rewards = Vec::with_capacity(actions.len());
    let mut breakdowns = Vec::with_capacity(actions.len());
    let mut delivered = Vec::with_capacity(actions.len());
    let mut cum = 0.0;
    for &action in actions {
        let out = env.step(action)?;
        rewards.push(out.reward);
        breakdowns.push(out.breakdown);
        cum += out.delivered_kw;
        delivered.push(out.delivered_kw);
    }
    Ok(Replay {
        actions: actions.to_vec(),
        return_sum: rewards.iter().sum(),
        rewards,
        breakdowns,
        delivered_kw: delivered,
        final_cum: cum,
    })
}

/// Historical charging schedule: charge wherever the metered EV load
/// exceeds the on-threshold.
pub fn uncontrolled_actions(p_ev_hist: &SlotSeries, horizon: usize, on_threshold: f64) -> Vec<Action> {
    p_ev_hist
        .iter()
        .take(horizon)
        .map(|&p| {
            if p > on_threshold {
                Action::Charge
            } else {
                Action::Idle
            }
        })
        .collect()
}

/// Replays the historical schedule; metrics for this baseline should be
/// computed from the raw metered series, not from the re-simulated
/// delivery levels.
pub fn uncontrolled_replay(
    env: &mut Env,
    p_ev_hist: &SlotSeries,
    on_threshold: f64,
) -> Result<Replay, EnvError> {
    let actions = uncontrolled_actions(p_ev_hist, env.horizon(), on_threshold);
    replay_schedule(env, &actions)
}

/// Discounted return accumulated back-to-front (Horner form), matching
/// the dynamic program's recursion exactly.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, &r| r + gamma * acc)
}
