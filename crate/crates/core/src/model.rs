//! Domain types, the billing-cycle cost functional and feasibility checks.
//!
//! Demand and dispatch levels are integer quanta; prices are exact rationals
//! expressed per quantum. Slot indices are zero-based throughout.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, DispatchError, Result};
use crate::rational::{int, Rational};

/// Net demand per slot over one billing cycle, in integer quanta.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DemandTrace {
    demand: Vec<u64>,
}

impl DemandTrace {
    pub fn new(demand: Vec<u64>) -> Result<Self> {
        if demand.is_empty() {
            return Err(DispatchError::Domain(
                "demand trace needs at least one slot".into(),
            ));
        }
        Ok(Self { demand })
    }

    /// All-zero trace of the given horizon.
    pub fn zeros(horizon: usize) -> Result<Self> {
        Self::new(vec![0; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.demand.len()
    }

    pub fn values(&self) -> &[u64] {
        &self.demand
    }

    pub fn get(&self, slot: usize) -> u64 {
        self.demand[slot]
    }

    pub fn peak(&self) -> u64 {
        self.demand.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.demand.iter().sum()
    }

    pub fn is_binary(&self) -> bool {
        self.demand.iter().all(|&e| e <= 1)
    }

    pub(crate) fn require_binary(&self) -> Result<()> {
        match self.demand.iter().position(|&e| e > 1) {
            None => Ok(()),
            Some(t) => Err(DispatchError::Domain(format!(
                "layer trace must be binary, slot {t} has demand {}",
                self.demand[t]
            ))),
        }
    }
}

/// Tariff for one billing cycle, all amounts per demand quantum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    spot: Vec<Rational>,
    local: Rational,
    peak: Rational,
    spot_floor: Rational,
    slot_hours: Rational,
}

impl PriceModel {
    /// `spot` is the grid volume price per slot, `local` the generation cost
    /// `p_g`, `peak` the peak price `p_m` and `spot_floor` the declared
    /// minimum spot price that defines `beta`.
    ///
    /// Spot prices must lie in `[0, local]`. A spot price below the declared
    /// floor is accepted and reported by [`PriceModel::floor_violations`].
    pub fn new(
        spot: Vec<Rational>,
        local: Rational,
        peak: Rational,
        spot_floor: Rational,
        slot_hours: Rational,
    ) -> Result<Self> {
        if spot.is_empty() {
            return Err(DispatchError::Domain("spot price series is empty".into()));
        }
        if local <= Rational::zero() {
            return Err(DispatchError::Domain(format!(
                "local generation price must be positive, got {local}"
            )));
        }
        if peak < Rational::zero() {
            return Err(DispatchError::Domain(format!(
                "peak price must be nonnegative, got {peak}"
            )));
        }
        if slot_hours <= Rational::zero() {
            return Err(DispatchError::Domain(format!(
                "slot length must be positive, got {slot_hours}"
            )));
        }
        if spot_floor < Rational::zero() || spot_floor > local {
            return Err(DispatchError::Domain(format!(
                "spot price floor {spot_floor} outside [0, {local}]"
            )));
        }
        if let Some(t) = spot
            .iter()
            .position(|p| *p < Rational::zero() || *p > local)
        {
            return Err(DispatchError::Domain(format!(
                "spot price {} at slot {t} outside [0, {local}]",
                spot[t]
            )));
        }
        Ok(Self {
            spot,
            local,
            peak,
            spot_floor,
            slot_hours,
        })
    }

    /// Flat spot price over `horizon` slots, floor equal to that price and
    /// unit slot length.
    pub fn flat(horizon: usize, spot: Rational, local: Rational, peak: Rational) -> Result<Self> {
        Self::new(vec![spot; horizon], local, peak, spot, Rational::one())
    }

    pub fn horizon(&self) -> usize {
        self.spot.len()
    }

    pub fn spot(&self) -> &[Rational] {
        &self.spot
    }

    pub fn spot_at(&self, slot: usize) -> &Rational {
        &self.spot[slot]
    }

    pub fn local(&self) -> &Rational {
        &self.local
    }

    pub fn peak(&self) -> &Rational {
        &self.peak
    }

    pub fn spot_floor(&self) -> &Rational {
        &self.spot_floor
    }

    pub fn slot_hours(&self) -> &Rational {
        &self.slot_hours
    }

    /// `beta = p_e_min / p_g`, always in `[0, 1]`.
    pub fn beta(&self) -> Rational {
        self.spot_floor / self.local
    }

    /// Slots whose realized spot price is below the declared floor.
    pub fn floor_violations(&self) -> Vec<usize> {
        self.spot
            .iter()
            .enumerate()
            .filter(|(_, p)| **p < self.spot_floor)
            .map(|(t, _)| t)
            .collect()
    }

    /// Same tariff with a different peak price.
    pub fn with_peak(&self, peak: Rational) -> Result<Self> {
        Self::new(
            self.spot.clone(),
            self.local,
            peak,
            self.spot_floor,
            self.slot_hours,
        )
    }

    /// Restriction to the first `horizon` slots.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        Self::new(
            self.spot[..horizon.min(self.spot.len())].to_vec(),
            self.local,
            self.peak,
            self.spot_floor,
            self.slot_hours,
        )
    }
}

/// Generator state before the first slot of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorStart {
    /// No constraint on the first slot's output.
    Free,
    /// Output before the first slot, ramp limits apply to the first transition.
    At(u64),
}

/// Local generator: capacity, ramp limits and the lookahead granted to
/// ramp-aware online dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    capacity: u64,
    ramp_up: u64,
    ramp_down: u64,
    lookahead: usize,
    start: GeneratorStart,
}

impl GeneratorSpec {
    /// Symmetric ramp limit `ramp`, cold start and lookahead `Gamma - 1`.
    pub fn new(capacity: u64, ramp: u64) -> Result<Self> {
        Self::asymmetric(capacity, ramp, ramp)
    }

    pub fn asymmetric(capacity: u64, ramp_up: u64, ramp_down: u64) -> Result<Self> {
        if ramp_up == 0 || ramp_down == 0 {
            return Err(DispatchError::Domain("ramp limits must be positive".into()));
        }
        let mut spec = Self {
            capacity,
            ramp_up,
            ramp_down,
            lookahead: 0,
            start: GeneratorStart::At(0),
        };
        spec.lookahead = spec.ramp_slots() - 1;
        Ok(spec)
    }

    /// A generator that can reach any level within one slot (`Gamma = 1`).
    pub fn fast(capacity: u64) -> Self {
        Self::new(capacity, capacity.max(1)).expect("positive ramp")
    }

    pub fn with_start(mut self, start: GeneratorStart) -> Self {
        self.start = start;
        self
    }

    pub fn with_lookahead(mut self, lookahead: usize) -> Self {
        self.lookahead = lookahead;
        self
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn ramp_up(&self) -> u64 {
        self.ramp_up
    }

    pub fn ramp_down(&self) -> u64 {
        self.ramp_down
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn start(&self) -> GeneratorStart {
        self.start
    }

    /// `Gamma = ceil(C / R_up)`, at least 1: slots needed to ramp from zero
    /// to full output.
    pub fn ramp_slots(&self) -> usize {
        (self.capacity.div_ceil(self.ramp_up) as usize).max(1)
    }

    /// `true` when ramp limits never bind, i.e. `Gamma == 1` in both
    /// directions.
    pub fn is_fast(&self) -> bool {
        self.ramp_up >= self.capacity && self.ramp_down >= self.capacity
    }
}

/// Per-slot local generation `u` and grid purchase `v`, in quanta.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub local: Vec<u64>,
    pub grid: Vec<u64>,
}

impl Schedule {
    pub fn new(local: Vec<u64>, grid: Vec<u64>) -> Result<Self> {
        ensure_len("grid series", local.len(), grid.len())?;
        Ok(Self { local, grid })
    }

    pub fn zeros(horizon: usize) -> Self {
        Self {
            local: vec![0; horizon],
            grid: vec![0; horizon],
        }
    }

    /// Serve everything from the grid.
    pub fn grid_only(trace: &DemandTrace) -> Self {
        Self {
            local: vec![0; trace.horizon()],
            grid: trace.values().to_vec(),
        }
    }

    /// Serve everything locally (ignores capacity).
    pub fn local_only(trace: &DemandTrace) -> Self {
        Self {
            local: trace.values().to_vec(),
            grid: vec![0; trace.horizon()],
        }
    }

    pub fn horizon(&self) -> usize {
        self.local.len()
    }

    pub fn peak_grid(&self) -> u64 {
        self.grid.iter().copied().max().unwrap_or(0)
    }

    /// Pointwise sum, used to recombine layer schedules.
    pub fn add(&mut self, other: &Schedule) -> Result<()> {
        ensure_len("schedule", self.horizon(), other.horizon())?;
        for (a, b) in self.local.iter_mut().zip(&other.local) {
            *a += b;
        }
        for (a, b) in self.grid.iter_mut().zip(&other.grid) {
            *a += b;
        }
        Ok(())
    }
}

/// Itemized bill for one cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub grid_volume: Rational,
    pub peak_charge: Rational,
    pub local_cost: Rational,
    pub total: Rational,
}

impl CostBreakdown {
    pub fn zero() -> Self {
        Self::from_parts(Rational::zero(), Rational::zero(), Rational::zero())
    }

    pub fn from_parts(grid_volume: Rational, peak_charge: Rational, local_cost: Rational) -> Self {
        let total = grid_volume + peak_charge + local_cost;
        Self {
            grid_volume,
            peak_charge,
            local_cost,
            total,
        }
    }

    /// Component-wise mean, e.g. over randomized trials. `None` when empty.
    pub fn mean<'a>(costs: impl IntoIterator<Item = &'a CostBreakdown>) -> Option<Self> {
        let mut n = 0i128;
        let mut acc = Self::zero();
        for c in costs {
            n += 1;
            acc.grid_volume += c.grid_volume;
            acc.peak_charge += c.peak_charge;
            acc.local_cost += c.local_cost;
        }
        if n == 0 {
            return None;
        }
        let n = int(n);
        Some(Self::from_parts(
            acc.grid_volume / n,
            acc.peak_charge / n,
            acc.local_cost / n,
        ))
    }
}

/// Billing-cycle cost: grid volume charge, peak charge on the largest grid
/// draw and local generation cost.
pub fn evaluate_cost(schedule: &Schedule, prices: &PriceModel) -> Result<CostBreakdown> {
    ensure_len("schedule", prices.horizon(), schedule.horizon())?;
    let grid_volume = schedule
        .grid
        .iter()
        .zip(prices.spot())
        .map(|(&v, p)| *p * int(v as i128))
        .fold(Rational::zero(), |a, b| a + b);
    let peak_charge = *prices.peak() * int(schedule.peak_grid() as i128);
    let local_units: u64 = schedule.local.iter().sum();
    let local_cost = *prices.local() * int(local_units as i128);
    Ok(CostBreakdown::from_parts(grid_volume, peak_charge, local_cost))
}

/// Converts a peak tariff in $/kW into $/kWh for slots of `slot_hours`.
pub fn convert_peak_price(peak_per_kw: Rational, slot_hours: Rational) -> Result<Rational> {
    if slot_hours <= Rational::zero() {
        return Err(DispatchError::Domain(format!(
            "slot length must be positive, got {slot_hours}"
        )));
    }
    Ok(peak_per_kw / slot_hours)
}

/// One violated constraint of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DemandShortfall {
        slot: usize,
        demand: u64,
        supplied: u64,
    },
    OverCapacity {
        slot: usize,
        output: u64,
        capacity: u64,
    },
    /// Output rose from `from` (previous slot, or the start level) to `to`.
    RampUp {
        slot: usize,
        from: u64,
        to: u64,
        limit: u64,
    },
    RampDown {
        slot: usize,
        from: u64,
        to: u64,
        limit: u64,
    },
}

impl Violation {
    pub fn slot(&self) -> usize {
        match *self {
            Violation::DemandShortfall { slot, .. }
            | Violation::OverCapacity { slot, .. }
            | Violation::RampUp { slot, .. }
            | Violation::RampDown { slot, .. } => slot,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DemandShortfall {
                slot,
                demand,
                supplied,
            } => write!(f, "slot {slot}: supplied {supplied} < demand {demand}"),
            Violation::OverCapacity {
                slot,
                output,
                capacity,
            } => write!(f, "slot {slot}: local output {output} > capacity {capacity}"),
            Violation::RampUp {
                slot,
                from,
                to,
                limit,
            } => write!(f, "slot {slot}: ramp up {from} -> {to} exceeds {limit}"),
            Violation::RampDown {
                slot,
                from,
                to,
                limit,
            } => write!(f, "slot {slot}: ramp down {from} -> {to} exceeds {limit}"),
        }
    }
}

pub(crate) fn ramp_violations(local: &[u64], gen: &GeneratorSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut prev = match gen.start() {
        GeneratorStart::Free => None,
        GeneratorStart::At(x) => Some(x),
    };
    for (slot, &to) in local.iter().enumerate() {
        if let Some(from) = prev {
            if to > from && to - from > gen.ramp_up() {
                out.push(Violation::RampUp {
                    slot,
                    from,
                    to,
                    limit: gen.ramp_up(),
                });
            } else if from > to && from - to > gen.ramp_down() {
                out.push(Violation::RampDown {
                    slot,
                    from,
                    to,
                    limit: gen.ramp_down(),
                });
            }
        }
        prev = Some(to);
    }
    out
}

/// Lists every violated constraint. Ramp limits (including the transition
/// from the generator's start level) are checked only when
/// `enforce_ramping` is set.
pub fn check_feasibility(
    schedule: &Schedule,
    trace: &DemandTrace,
    gen: &GeneratorSpec,
    enforce_ramping: bool,
) -> Result<Vec<Violation>> {
    ensure_len("schedule", trace.horizon(), schedule.horizon())?;
    let mut out = Vec::new();
    for (slot, ((&u, &v), &e)) in schedule
        .local
        .iter()
        .zip(&schedule.grid)
        .zip(trace.values())
        .enumerate()
    {
        if u + v < e {
            out.push(Violation::DemandShortfall {
                slot,
                demand: e,
                supplied: u + v,
            });
        }
        if u > gen.capacity() {
            out.push(Violation::OverCapacity {
                slot,
                output: u,
                capacity: gen.capacity(),
            });
        }
    }
    if enforce_ramping {
        out.extend(ramp_violations(&schedule.local, gen));
    }
    out.sort_by_key(|v| v.slot());
    Ok(out)
}

/// Splits integer demand into stacked binary layers: layer `k` (1-based in
/// the usual drawing, index `k - 1` here) is 1 at slot `t` iff `e(t) >= k`.
pub fn layer_demand(trace: &DemandTrace) -> Vec<DemandTrace> {
    (1..=trace.peak())
        .map(|k| DemandTrace {
            demand: trace.values().iter().map(|&e| u64::from(e >= k)).collect(),
        })
        .collect()
}
