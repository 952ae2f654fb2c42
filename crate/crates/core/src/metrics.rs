//! Evaluation metrics: self-consumption index (SCI), total electricity
//! cost (TEC), peak-to-average ratio (PAR), their community variants and
//! savings, plus the per-episode report record.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DrClass;
use crate::env::Action;
use crate::tariff::TariffSchedule;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("SCI is undefined for a schedule with zero EV load")]
    ZeroEvLoad,
    #[error("PAR is undefined for an identically zero grid flow")]
    ZeroFlow,
    #[error("savings are undefined for a zero baseline cost")]
    ZeroBaseline,
}

/// Fraction of the scheduled EV energy covered by PV generation,
/// slot-wise: `sum(min(ev, pv)) / sum(ev)`.
pub fn sci(p_ev_sched: &[f64], p_pv: &[f64]) -> Result<f64, MetricsError> {
    let total: f64 = p_ev_sched.iter().sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroEvLoad);
    }
    let covered: f64 = p_ev_sched
        .iter()
        .zip(p_pv)
        .map(|(&ev, &pv)| ev.min(pv))
        .sum();
    Ok(covered / total)
}

/// Daily cost ($) of the net grid exchange at time-of-use prices.
pub fn tec(
    p_res: &[f64],
    p_ev_sched: &[f64],
    p_pv: &[f64],
    schedule: &TariffSchedule,
) -> f64 {
    p_res
        .iter()
        .zip(p_ev_sched)
        .zip(p_pv)
        .enumerate()
        .map(|(slot, ((&res, &ev), &pv))| schedule.price_at(slot) * (res + ev - pv) / 4.0)
        .sum()
}

/// Peak-to-average ratio of the absolute grid flow `res + ev - pv`.
pub fn par(p_res: &[f64], p_ev_sched: &[f64], p_pv: &[f64]) -> Result<f64, MetricsError> {
    let flow: Vec<f64> = p_res
        .iter()
        .zip(p_ev_sched)
        .zip(p_pv)
        .map(|((&res, &ev), &pv)| (res + ev - pv).abs())
        .collect();
    par_of_abs_flow(&flow)
}

fn par_of_abs_flow(abs_flow: &[f64]) -> Result<f64, MetricsError> {
    let peak = abs_flow.iter().copied().fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(MetricsError::ZeroFlow);
    }
    let mean = abs_flow.iter().sum::<f64>() / abs_flow.len() as f64;
    Ok(peak / mean)
}

/// Community SCI against the shared panel: the slot-wise minimum is taken
/// between the pooled EV load and the shared PV.
pub fn sci_comm(per_house_ev: &[Vec<f64>], p_pv_shared: &[f64]) -> Result<f64, MetricsError> {
    let slots = p_pv_shared.len();
    let pooled: Vec<f64> = (0..slots)
        .map(|t| per_house_ev.iter().map(|ev| ev[t]).sum())
        .collect();
    sci(&pooled, p_pv_shared)
}

/// SCI of individually optimized households: per-house minima pooled over
/// the community.
pub fn sci_ind(
    per_house_ev: &[Vec<f64>],
    per_house_pv: &[Vec<f64>],
) -> Result<f64, MetricsError> {
    let total: f64 = per_house_ev.iter().flatten().sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroEvLoad);
    }
    let covered: f64 = per_house_ev
        .iter()
        .zip(per_house_pv)
        .map(|(ev, pv)| {
            ev.iter()
                .zip(pv)
                .map(|(&e, &p)| e.min(p))
                .sum::<f64>()
        })
        .sum();
    Ok(covered / total)
}

/// Community cost: pooled household loads against the shared PV.
pub fn tec_comm(
    per_house_res: &[Vec<f64>],
    per_house_ev: &[Vec<f64>],
    p_pv_shared: &[f64],
    schedule: &TariffSchedule,
) -> f64 {
    p_pv_shared
        .iter()
        .enumerate()
        .map(|(slot, &pv)| {
            let load: f64 = per_house_res
                .iter()
                .zip(per_house_ev)
                .map(|(res, ev)| res[slot] + ev[slot])
                .sum();
            schedule.price_at(slot) * (load - pv) / 4.0
        })
        .sum()
}

/// Which flow the community PAR is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParVariant {
    /// PAR of the net aggregated community flow (default).
    Aggregated,
    /// Sum of per-house absolute flows, each house credited an equal PV
    /// share.
    PerHouseAbs,
}

/// Community PAR; see [`ParVariant`] for the two flow definitions.
pub fn par_comm(
    per_house_res: &[Vec<f64>],
    per_house_ev: &[Vec<f64>],
    p_pv_shared: &[f64],
    variant: ParVariant,
) -> Result<f64, MetricsError> {
    let n = per_house_res.len();
    let flow: Vec<f64> = p_pv_shared
        .iter()
        .enumerate()
        .map(|(slot, &pv)| match variant {
            ParVariant::Aggregated => {
                let load: f64 = per_house_res
                    .iter()
                    .zip(per_house_ev)
                    .map(|(res, ev)| res[slot] + ev[slot])
                    .sum();
                (load - pv).abs()
            }
            ParVariant::PerHouseAbs => per_house_res
                .iter()
                .zip(per_house_ev)
                .map(|(res, ev)| (res[slot] + ev[slot] - pv / n as f64).abs())
                .sum(),
        })
        .collect();
    par_of_abs_flow(&flow)
}

/// Relative cost reduction `(base - opt) / base`.
pub fn savings(tec_base: f64, tec_opt: f64) -> Result<f64, MetricsError> {
    if tec_base == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((tec_base - tec_opt) / tec_base)
}

/// Everything reported about one evaluated episode (one house and method,
/// or one community day).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub house_id: String,
    pub date: NaiveDate,
    pub dr_class: DrClass,
    /// Evaluation method that produced the schedule (`uc`, `dqn`, `ndqn`,
    /// `madqn`, `oracle`).
    pub method: String,
    pub actions: Vec<Action>,
    pub delivered_kw: Vec<f64>,
    /// `None` when the schedule has zero EV load.
    pub sci: Option<f64>,
    pub tec: f64,
    /// `None` when the grid flow is identically zero.
    pub par: Option<f64>,
    pub reward_return: f64,
    pub load_match: bool,
}
