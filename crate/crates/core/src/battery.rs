//! EV battery and charger dynamics.
//!
//! Models a two-level AC charger (defaults: Nissan Leaf, 24 kWh, level-2
//! charger at 90.5% efficiency): 3.3 kW while the state of charge is at or
//! below the switch point, 1.5 kW above it. The initial SoC of a day is
//! derived from the day's total historical EV load under the assumption
//! that the observed load corresponds to one full charging cycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BatteryError {
    #[error("invalid battery model: {0}")]
    InvalidModel(String),
}

/// Battery pack plus charger parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryModel {
    /// Rated battery capacity in kWh.
    pub capacity_kwh: f64,
    /// Charging efficiency fraction.
    pub eta: f64,
    /// Charger power below/at the switch point, kW.
    pub p_high: f64,
    /// Charger power above the switch point, kW.
    pub p_low: f64,
    /// SoC at which the charger drops from `p_high` to `p_low` (inclusive).
    pub soc_switch: f64,
    /// Hard SoC ceiling; charging past it raises the violation flag.
    pub soc_max: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            capacity_kwh: 24.0,
            eta: 0.905,
            p_high: 3.3,
            p_low: 1.5,
            soc_switch: 0.9,
            soc_max: 1.0,
        }
    }
}

/// Initial state of charge for a day, with the over-capacity flag raised
/// when the day's historical load exceeds what one full cycle can hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSoc {
    pub soc: f64,
    pub over_capacity: bool,
}

/// Result of applying one slot of charging power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocUpdate {
    pub soc: f64,
    /// True when the raw update would have exceeded `soc_max`.
    pub violated: bool,
}

impl BatteryModel {
    pub fn validate(&self) -> Result<(), BatteryError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(BatteryError::InvalidModel(format!(
                "eta must be in (0,1], got {}",
                self.eta
            )));
        }
        if !(self.p_low > 0.0 && self.p_low < self.p_high) {
            return Err(BatteryError::InvalidModel(format!(
                "need 0 < p_low < p_high, got p_low={} p_high={}",
                self.p_low, self.p_high
            )));
        }
        if !(self.soc_switch > 0.0 && self.soc_switch < self.soc_max && self.soc_max <= 1.0) {
            return Err(BatteryError::InvalidModel(format!(
                "need 0 < soc_switch < soc_max <= 1, got switch={} max={}",
                self.soc_switch, self.soc_max
            )));
        }
        if !(self.capacity_kwh > 0.0) {
            return Err(BatteryError::InvalidModel(format!(
                "capacity must be > 0, got {}",
                self.capacity_kwh
            )));
        }
        Ok(())
    }

    /// Initial SoC of a day whose historical EV load sums to `daily_ev_sum`
    /// (kW over 15-minute slots): `1 - eta * sum / (4 * capacity)`, clamped
    /// at 0 with the over-capacity flag raised if clamping was needed.
    pub fn initial_soc(&self, daily_ev_sum: f64) -> InitialSoc {
        let raw = 1.0 - self.eta * daily_ev_sum / (4.0 * self.capacity_kwh);
        InitialSoc {
            soc: raw.max(0.0),
            over_capacity: raw < 0.0,
        }
    }

    /// Charger power for the current SoC; the switch point itself still
    /// takes the high level.
    pub fn charge_power(&self, soc: f64) -> f64 {
        if soc <= self.soc_switch {
            self.p_high
        } else {
            self.p_low
        }
    }

    /// Applies one slot of charging at power `p` (kW), clamping at
    /// `soc_max` and flagging the violation instead of rejecting it.
    pub fn apply_charge(&self, soc: f64, p: f64) -> SocUpdate {
        let raw = soc + self.eta * p / (4.0 * self.capacity_kwh);
        SocUpdate {
            soc: raw.min(self.soc_max),
            violated: raw > self.soc_max,
        }
    }
}
