//! Peak-aware economic dispatch for a microgrid with a local generator.
//!
//! Each slot the operator splits integer demand between a local generator
//! (price `p_g` per unit) and the grid (spot price `p_e(t)` plus a peak charge
//! `p_m` on the largest grid draw). The crate provides exact offline optima,
//! the online threshold algorithms for fast and ramp-limited generators, and
//! the competitive-ratio analysis of the threshold family.

pub mod analysis;
pub mod error;
pub mod model;
pub mod offline;
pub mod online_fast;
pub mod online_ramp;
pub mod rational;

pub use error::{DispatchError, Result};
pub use model::{
    check_feasibility, convert_peak_price, evaluate_cost, layer_demand, CostBreakdown,
    DemandTrace, GeneratorSpec, GeneratorStart, PriceModel, Schedule, Violation,
};
pub use offline::{
    compute_critical_capacity, compute_sigma, offline_cost, offline_fspaed, offline_fspaed_k,
    offline_paed_dp, solve_fspaed, solve_paed_dp,
};
pub use online_fast::{
    run_bed, run_bed_k, run_red, run_red_k, sample_threshold, LayeredDispatcher,
    OnlineDecision, OnlineDispatcher, Threshold,
};
pub use online_ramp::{
    check_ramp_feasible, neutralize_ramping, run_nrbf, run_nrbf_with_forecast, BaseAlgorithm,
    DemandForecast, PerfectForecast,
};
pub use rational::Rational;
