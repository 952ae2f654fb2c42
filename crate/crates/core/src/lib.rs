//! Simulation and learning toolkit for residential EV charging optimization.
//!
//! The toolkit models one day of household electricity data as a 96-slot
//! episode (15-minute resolution) and optimizes when to charge an EV under a
//! time-of-use tariff, with solar self-consumption, user charging habits,
//! electricity cost and battery limits shaped into the reward. It provides:
//!
//! - [`data`]: CSV ingestion, eligibility filtering and a synthetic generator,
//! - [`tariff`]: time-of-use price bands and per-slot grid-exchange cost,
//! - [`stats`]: charging-frequency and cost profiles with their quantiles,
//! - [`battery`]: two-level charger and state-of-charge dynamics,
//! - [`env`]: the single-household episodic RL environment,
//! - [`community`]: the lockstep multi-household environment with shared PV,
//! - [`learner`]: a from-scratch MLP Q-learner with N-step targets,
//! - [`oracle`]: exact dynamic-programming and brute-force references,
//! - [`metrics`]: SCI / TEC / PAR evaluation metrics and report types.

pub mod battery;
pub mod community;
pub mod data;
pub mod env;
pub mod learner;
pub mod metrics;
pub mod oracle;
pub mod stats;
pub mod tariff;

/// Number of 15-minute slots in one daily episode.
pub const SLOTS_PER_DAY: usize = 96;

/// Conversion factor from average kW over one slot to kWh (15 min = 1/4 h).
pub const KW_TO_KWH_PER_SLOT: f64 = 0.25;
