//! Offline optima: the closed-form rule for a binary layer, an exhaustive
//! oracle for it, the peak-cap search for the capacity-constrained problem,
//! the ramp-constrained dynamic program and the critical capacity.
//!
//! Every solver enumerates an integer peak cap `M`. Once the cap is fixed
//! the slots decouple (or, with ramping, form a chain), and grid energy is
//! never more expensive than local energy, so the grid is filled up to the
//! cap first.

use std::collections::VecDeque;

use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{DispatchError, Result};
use crate::model::{evaluate_cost, DemandTrace, GeneratorSpec, GeneratorStart, PriceModel, Schedule};
use crate::rational::Rational;

/// Largest horizon the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_HORIZON: usize = 20;

/// Critical peak-demand threshold of a binary layer: accumulated local
/// generation deficit over the whole cycle, in units of the peak price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaValue {
    pub sigma: Rational,
}

/// Local capacity beyond which the unconstrained offline optimum stops
/// using extra generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalCapacity {
    pub c_tilde: u64,
}

/// Offline solution together with the peak cap it was built around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeakCapSolution {
    pub peak_cap: u64,
    pub schedule: Schedule,
}

/// `sum_t (p_g - p_e(t)) * e(t)` for a binary layer.
pub fn layer_deficit(trace_k: &DemandTrace, prices: &PriceModel) -> Result<Rational> {
    trace_k.require_binary()?;
    crate::error::ensure_len("price series", trace_k.horizon(), prices.horizon())?;
    Ok(trace_k
        .values()
        .iter()
        .zip(prices.spot())
        .filter(|(&e, _)| e == 1)
        .map(|(_, p)| *prices.local() - *p)
        .fold(Rational::zero(), |a, b| a + b))
}

pub fn compute_sigma(trace_k: &DemandTrace, prices: &PriceModel) -> Result<SigmaValue> {
    let deficit = layer_deficit(trace_k, prices)?;
    if prices.peak().is_zero() {
        return Err(DispatchError::Domain(
            "sigma is undefined for a zero peak price".into(),
        ));
    }
    Ok(SigmaValue {
        sigma: deficit / *prices.peak(),
    })
}

/// Optimal offline schedule of a binary layer: all grid when `sigma > 1`,
/// otherwise all local. The comparison is done as `deficit > p_m` so that
/// a zero peak price needs no special case.
pub fn offline_fspaed_k(trace_k: &DemandTrace, prices: &PriceModel) -> Result<Schedule> {
    let deficit = layer_deficit(trace_k, prices)?;
    Ok(if deficit > *prices.peak() {
        Schedule::grid_only(trace_k)
    } else {
        Schedule::local_only(trace_k)
    })
}

/// Exhaustive search over every binary grid assignment of a layer. Ties go
/// to the lexicographically smallest grid series.
pub fn brute_force_fspaed_k(trace_k: &DemandTrace, prices: &PriceModel) -> Result<Schedule> {
    trace_k.require_binary()?;
    crate::error::ensure_len("price series", trace_k.horizon(), prices.horizon())?;
    let horizon = trace_k.horizon();
    if horizon > BRUTE_FORCE_MAX_HORIZON {
        return Err(DispatchError::Capacity(format!(
            "brute force limited to {BRUTE_FORCE_MAX_HORIZON} slots, got {horizon}"
        )));
    }
    let demand = trace_k.values();
    // Bit (horizon - 1 - t) of `mask` is v(t), so numeric order is
    // lexicographic order of the grid series.
    let demand_mask: u32 = demand
        .iter()
        .enumerate()
        .filter(|(_, &e)| e == 1)
        .map(|(t, _)| 1u32 << (horizon - 1 - t))
        .sum();
    let mut best: Option<(Rational, Schedule)> = None;
    for mask in 0u32..(1u32 << horizon) {
        if mask & !demand_mask != 0 {
            continue;
        }
        let grid: Vec<u64> = (0..horizon)
            .map(|t| u64::from(mask >> (horizon - 1 - t) & 1 == 1))
            .collect();
        let local: Vec<u64> = demand.iter().zip(&grid).map(|(e, v)| e - v).collect();
        let schedule = Schedule::new(local, grid)?;
        let cost = evaluate_cost(&schedule, prices)?.total;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, schedule));
        }
    }
    Ok(best.expect("at least the all-zero assignment").1)
}

/// Prices multiplied by a common denominator so that the inner loops of
/// the solvers run on exact integers.
struct ScaledPrices {
    spot: Vec<i128>,
    local: i128,
    peak: i128,
}

impl ScaledPrices {
    fn new(prices: &PriceModel) -> Result<Self> {
        let overflow =
            || DispatchError::Capacity("price denominators too large to scale exactly".into());
        let mut denom: i128 = 1;
        for p in prices
            .spot()
            .iter()
            .chain([prices.local(), prices.peak()])
        {
            let d = *p.denom();
            denom = (denom / denom.gcd(&d)).checked_mul(d).ok_or_else(overflow)?;
        }
        let scale = |p: &Rational| -> Result<i128> {
            p.numer()
                .checked_mul(denom / p.denom())
                .ok_or_else(overflow)
        };
        Ok(Self {
            spot: prices.spot().iter().map(scale).collect::<Result<_>>()?,
            local: scale(prices.local())?,
            peak: scale(prices.peak())?,
        })
    }
}

fn check_horizon(trace: &DemandTrace, prices: &PriceModel) -> Result<()> {
    crate::error::ensure_len("price series", trace.horizon(), prices.horizon())
}

/// Exact optimum of the capacity-constrained problem without ramp limits.
/// Among equally cheap caps the smallest is returned.
pub fn solve_fspaed(
    trace: &DemandTrace,
    prices: &PriceModel,
    capacity: u64,
) -> Result<PeakCapSolution> {
    check_horizon(trace, prices)?;
    let scaled = ScaledPrices::new(prices)?;
    let peak = trace.peak();
    let lowest_cap = peak.saturating_sub(capacity);
    let mut best: Option<(i128, u64)> = None;
    for cap in lowest_cap..=peak {
        let mut cost = scaled.peak * cap as i128;
        for (&e, &p) in trace.values().iter().zip(&scaled.spot) {
            let v = e.min(cap);
            cost += p * v as i128 + scaled.local * (e - v) as i128;
        }
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, cap));
        }
    }
    let (_, peak_cap) = best.expect("cap = peak demand is always feasible");
    let grid: Vec<u64> = trace.values().iter().map(|&e| e.min(peak_cap)).collect();
    let local = trace
        .values()
        .iter()
        .zip(&grid)
        .map(|(e, v)| e - v)
        .collect();
    debug_assert!(trace.values().iter().all(|&e| e - e.min(peak_cap) <= capacity));
    Ok(PeakCapSolution {
        peak_cap,
        schedule: Schedule::new(local, grid)?,
    })
}

pub fn offline_fspaed(trace: &DemandTrace, prices: &PriceModel, capacity: u64) -> Result<Schedule> {
    Ok(solve_fspaed(trace, prices, capacity)?.schedule)
}

/// Exact optimum with ramp limits: for every integer peak cap an exact DP
/// over the generator output levels, then the cheapest cap. Ties in the DP
/// prefer lower output; ties between caps prefer the smaller cap.
pub fn solve_paed_dp(
    trace: &DemandTrace,
    prices: &PriceModel,
    gen: &GeneratorSpec,
) -> Result<PeakCapSolution> {
    check_horizon(trace, prices)?;
    if let GeneratorStart::At(x) = gen.start() {
        if x > gen.capacity() {
            return Err(DispatchError::Config(format!(
                "start level {x} exceeds capacity {}",
                gen.capacity()
            )));
        }
    }
    let scaled = ScaledPrices::new(prices)?;
    let peak = trace.peak();
    let lowest_cap = peak.saturating_sub(gen.capacity());
    let mut best: Option<(i128, PeakCapSolution)> = None;
    for cap in lowest_cap..=peak {
        let Some((cost, local)) = ramp_dp(trace, &scaled, gen, cap) else {
            continue;
        };
        let cost = cost + scaled.peak * cap as i128;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            let grid = trace
                .values()
                .iter()
                .zip(&local)
                .map(|(&e, &u)| e.saturating_sub(u))
                .collect();
            best = Some((
                cost,
                PeakCapSolution {
                    peak_cap: cap,
                    schedule: Schedule::new(local, grid)?,
                },
            ));
        }
    }
    best.map(|(_, s)| s).ok_or_else(|| {
        DispatchError::Config("no peak cap admits a ramp-feasible schedule".into())
    })
}

pub fn offline_paed_dp(
    trace: &DemandTrace,
    prices: &PriceModel,
    gen: &GeneratorSpec,
) -> Result<Schedule> {
    Ok(solve_paed_dp(trace, prices, gen)?.schedule)
}

/// Minimum volume cost (scaled) of a ramp-feasible output path whose grid
/// draw never exceeds `cap`, and the path itself.
fn ramp_dp(
    trace: &DemandTrace,
    scaled: &ScaledPrices,
    gen: &GeneratorSpec,
    cap: u64,
) -> Option<(i128, Vec<u64>)> {
    let c = gen.capacity() as usize;
    let horizon = trace.horizon();
    let demand = trace.values();
    let slot_cost = |t: usize, u: usize| -> i128 {
        let e = demand[t] as i128;
        let u = u as i128;
        scaled.local * u + scaled.spot[t] * (e - u).max(0)
    };
    let lower = |t: usize| demand[t].saturating_sub(cap) as usize;

    let mut value: Vec<Option<i128>> = vec![None; c + 1];
    let lo0 = lower(0);
    if lo0 > c {
        return None;
    }
    let (start_lo, start_hi) = match gen.start() {
        GeneratorStart::Free => (0, c),
        GeneratorStart::At(x) => (
            x.saturating_sub(gen.ramp_down()) as usize,
            (x.saturating_add(gen.ramp_up()) as usize).min(c),
        ),
    };
    for (u, slot) in value.iter_mut().enumerate() {
        if u >= lo0.max(start_lo) && u <= start_hi {
            *slot = Some(slot_cost(0, u));
        }
    }
    let mut pred: Vec<Vec<u32>> = Vec::with_capacity(horizon.saturating_sub(1));
    let up = gen.ramp_up().min(c as u64) as usize;
    let down = gen.ramp_down().min(c as u64) as usize;
    for t in 1..horizon {
        let lo = lower(t);
        if lo > c {
            return None;
        }
        let mut next = vec![None; c + 1];
        let mut from = vec![0u32; c + 1];
        // Predecessors of level u lie in [u - up, u + down]; both ends grow
        // with u, so a monotone deque yields each window minimum.
        let mut window: VecDeque<usize> = VecDeque::new();
        let mut pushed = 0usize;
        for u in 0..=c {
            let hi = (u + down).min(c);
            while pushed <= hi {
                if let Some(val) = value[pushed] {
                    while window.back().is_some_and(|&b| value[b].unwrap() > val) {
                        window.pop_back();
                    }
                    window.push_back(pushed);
                }
                pushed += 1;
            }
            let lo_pred = u.saturating_sub(up);
            while window.front().is_some_and(|&f| f < lo_pred) {
                window.pop_front();
            }
            if u < lo {
                continue;
            }
            if let Some(&f) = window.front() {
                next[u] = Some(value[f].unwrap() + slot_cost(t, u));
                from[u] = f as u32;
            }
        }
        value = next;
        pred.push(from);
    }
    let (mut u, cost) = value
        .iter()
        .enumerate()
        .filter_map(|(u, v)| v.map(|v| (u, v)))
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))?;
    let mut path = vec![0u64; horizon];
    for t in (0..horizon).rev() {
        path[t] = u as u64;
        if t > 0 {
            u = pred[t - 1][u] as usize;
        }
    }
    Some((cost, path))
}

/// Solves the problem with unlimited capacity and reports the largest
/// local output of the optimum, `max e - M*`.
pub fn compute_critical_capacity(
    trace: &DemandTrace,
    prices: &PriceModel,
) -> Result<CriticalCapacity> {
    let solution = solve_fspaed(trace, prices, trace.peak())?;
    Ok(CriticalCapacity {
        c_tilde: trace.peak() - solution.peak_cap,
    })
}

/// Cost of the offline optimum as an exact rational.
pub fn offline_cost(schedule: &Schedule, prices: &PriceModel) -> Result<Rational> {
    Ok(evaluate_cost(schedule, prices)?.total)
}
