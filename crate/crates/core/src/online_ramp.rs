//! Ramp-aware online dispatch with a short lookahead window.
//!
//! The relaxed (ramp-free) online schedule is computed slot by slot and the
//! emitted generator output is
//!
//! ```text
//! u~(t) = max{ u~(t-1) - R_down, u(t+i) - i * R_up : i = 0..lookahead }
//! ```
//!
//! clamped to `[0, C]`, with the remaining demand bought from the grid. A
//! lookahead of `Gamma - 1` slots is enough to pre-ramp for any future
//! output, so the result respects the ramp limits and never draws more from
//! the grid than the relaxed schedule did.

use num_traits::{One, Zero};

use crate::error::{ensure_len, DispatchError, Result};
use crate::model::{ramp_violations, DemandTrace, GeneratorSpec, GeneratorStart, PriceModel, Schedule};
use crate::online_fast::{sample_threshold_seeded, LayeredDispatcher, OnlineDispatcher, Threshold};
use crate::rational::{int, Rational};

/// Relaxed online algorithm that feeds the ramp adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseAlgorithm {
    Bed,
    Red { seed: u64 },
}

impl BaseAlgorithm {
    pub fn threshold(&self, prices: &PriceModel) -> Result<Threshold> {
        match *self {
            BaseAlgorithm::Bed => Ok(Threshold::break_even()),
            BaseAlgorithm::Red { seed } => {
                sample_threshold_seeded(crate::rational::to_f64(&prices.beta()), seed)
            }
        }
    }
}

/// Source of the demand values shown in the lookahead window.
pub trait DemandForecast {
    /// Demand expected at `slot`, as seen at time `now < slot`.
    fn forecast(&mut self, now: usize, slot: usize, actual: u64) -> u64;
}

/// Exact knowledge of the window.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectForecast;

impl DemandForecast for PerfectForecast {
    fn forecast(&mut self, _now: usize, _slot: usize, actual: u64) -> u64 {
        actual
    }
}

fn check_lookahead(gen: &GeneratorSpec) -> Result<()> {
    let needed = gen.ramp_slots() - 1;
    if gen.lookahead() < needed {
        return Err(DispatchError::Config(format!(
            "lookahead {} is shorter than Gamma - 1 = {needed}",
            gen.lookahead()
        )));
    }
    Ok(())
}

/// One step of the adjustment rule. `window[i]` is the relaxed output
/// planned for slot `t + i`; `previous` is `u~(t-1)` if constrained.
fn adjusted_output(previous: Option<u64>, window: &[u64], gen: &GeneratorSpec) -> u64 {
    let pre_ramp = window
        .iter()
        .enumerate()
        .map(|(i, &u)| u.saturating_sub(i as u64 * gen.ramp_up()))
        .max()
        .unwrap_or(0);
    let decay = previous.map_or(0, |p| p.saturating_sub(gen.ramp_down()));
    let mut out = pre_ramp.max(decay);
    if let Some(p) = previous {
        // Binds only with a pinned start level or an inexact forecast.
        out = out.min(p + gen.ramp_up());
    }
    debug_assert!(out <= gen.capacity());
    out.min(gen.capacity())
}

/// Applies the adjustment rule to a complete relaxed output series.
pub fn neutralize_ramping(
    relaxed_local: &[u64],
    trace: &DemandTrace,
    gen: &GeneratorSpec,
) -> Result<Schedule> {
    ensure_len("relaxed schedule", trace.horizon(), relaxed_local.len())?;
    check_lookahead(gen)?;
    if let Some(t) = relaxed_local.iter().position(|&u| u > gen.capacity()) {
        return Err(DispatchError::Domain(format!(
            "relaxed output {} at slot {t} exceeds capacity {}",
            relaxed_local[t],
            gen.capacity()
        )));
    }
    let horizon = trace.horizon();
    let mut previous = start_level(gen);
    let mut schedule = Schedule::zeros(horizon);
    for t in 0..horizon {
        let end = (t + gen.lookahead() + 1).min(horizon);
        let u = adjusted_output(previous, &relaxed_local[t..end], gen);
        schedule.local[t] = u;
        schedule.grid[t] = trace.get(t).saturating_sub(u);
        previous = Some(u);
    }
    Ok(schedule)
}

fn start_level(gen: &GeneratorSpec) -> Option<u64> {
    match gen.start() {
        GeneratorStart::Free => None,
        GeneratorStart::At(x) => Some(x),
    }
}

/// Ramp-aware online dispatch with exact lookahead.
pub fn run_nrbf(
    trace: &DemandTrace,
    prices: &PriceModel,
    gen: &GeneratorSpec,
    base: BaseAlgorithm,
) -> Result<Schedule> {
    run_nrbf_with_forecast(trace, prices, gen, base, &mut PerfectForecast)
}

/// Ramp-aware online dispatch. The relaxed dispatcher advances on realized
/// demand; a clone of it is run through the forecast window to obtain the
/// planned outputs of the next `lookahead` slots. Spot prices in the window
/// are taken as known.
pub fn run_nrbf_with_forecast<F: DemandForecast + ?Sized>(
    trace: &DemandTrace,
    prices: &PriceModel,
    gen: &GeneratorSpec,
    base: BaseAlgorithm,
    forecast: &mut F,
) -> Result<Schedule> {
    ensure_len("price series", trace.horizon(), prices.horizon())?;
    check_lookahead(gen)?;
    let threshold = base.threshold(prices)?;
    let mut relaxed = LayeredDispatcher::new(prices, gen.capacity(), threshold);
    let horizon = trace.horizon();
    let mut previous = start_level(gen);
    let mut schedule = Schedule::zeros(horizon);
    let mut window = Vec::with_capacity(gen.lookahead() + 1);
    for t in 0..horizon {
        window.clear();
        window.push(relaxed.step(trace.get(t), prices.spot_at(t)).local);
        let end = (t + gen.lookahead() + 1).min(horizon);
        if end > t + 1 {
            let mut probe = relaxed.clone();
            for slot in t + 1..end {
                let predicted = forecast.forecast(t, slot, trace.get(slot));
                window.push(probe.step(predicted, prices.spot_at(slot)).local);
            }
        }
        let u = adjusted_output(previous, &window, gen);
        schedule.local[t] = u;
        schedule.grid[t] = trace.get(t).saturating_sub(u);
        previous = Some(u);
    }
    Ok(schedule)
}

/// `true` iff every transition (including the one from a pinned start
/// level) stays within the ramp limits.
pub fn check_ramp_feasible(schedule: &Schedule, gen: &GeneratorSpec) -> bool {
    ramp_violations(&schedule.local, gen).is_empty()
}

/// Lower bound on the competitive ratio of any online algorithm without
/// lookahead under symmetric ramp limit `R`:
/// `(p_m (C - R) + p_g R) / (p_g (R Gamma (Gamma - 1) + C))`.
pub fn ramping_lower_bound(gen: &GeneratorSpec, prices: &PriceModel) -> Result<Rational> {
    if gen.ramp_up() != gen.ramp_down() {
        return Err(DispatchError::Domain(
            "the ramping lower bound assumes symmetric ramp limits".into(),
        ));
    }
    let c = int(gen.capacity() as i128);
    let r = int(gen.ramp_up() as i128);
    if c < r || c.is_zero() {
        return Err(DispatchError::Domain(format!(
            "bound is degenerate for capacity {c} below ramp limit {r}"
        )));
    }
    let gamma = int(gen.ramp_slots() as i128);
    let pm = *prices.peak();
    let pg = *prices.local();
    Ok((pm * (c - r) + pg * r) / (pg * (r * gamma * (gamma - Rational::one()) + c)))
}
