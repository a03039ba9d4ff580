//! Online dispatch for generators without ramp limits.
//!
//! Each binary demand layer runs a threshold rule: serve locally while the
//! accumulated local-generation deficit stays below `s * p_m`, then pay the
//! peak premium once and stay on the grid for the rest of the cycle.
//! Integer demand is handled by stacking layers; layers that cannot fit
//! under the generator capacity are pushed to the grid.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, DispatchError, Result};
use crate::model::{DemandTrace, PriceModel, Schedule};
use crate::rational::{int, Rational};

/// Switching threshold `s`, in units of the peak price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Threshold {
    Finite(Rational),
    /// Never switch to the grid voluntarily.
    Never,
}

impl Threshold {
    /// `s = 1`: switch when the deficit first covers the peak charge.
    pub fn break_even() -> Self {
        Threshold::Finite(int(1))
    }

    /// Converts a sampled real threshold; `+inf` maps to [`Threshold::Never`].
    pub fn from_f64(s: f64) -> Result<Self> {
        if s == f64::INFINITY {
            return Ok(Threshold::Never);
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(DispatchError::Domain(format!("invalid threshold {s}")));
        }
        Rational::approximate_float(s)
            .map(Threshold::Finite)
            .ok_or_else(|| DispatchError::Domain(format!("threshold {s} not representable")))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Threshold::Finite(s) => crate::rational::to_f64(s),
            Threshold::Never => f64::INFINITY,
        }
    }
}

/// Per-layer online state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerState {
    /// Accumulated deficit `sum (p_g - p_e(t)) e(t)`, frozen after commitment.
    pub zeta: Rational,
    pub committed_to_grid: bool,
    pub threshold: Threshold,
    /// `s * p_m`, cached.
    switch_at: Option<Rational>,
}

impl LayerState {
    pub fn new(threshold: Threshold, prices: &PriceModel) -> Self {
        let switch_at = match threshold {
            Threshold::Finite(s) => Some(s * *prices.peak()),
            Threshold::Never => None,
        };
        Self {
            zeta: Rational::zero(),
            committed_to_grid: false,
            threshold,
            switch_at,
        }
    }

    /// Processes one slot of a binary layer in place.
    pub fn step(&mut self, demand: bool, spot: &Rational, prices: &PriceModel) -> OnlineDecision {
        let e = u64::from(demand);
        if self.committed_to_grid {
            return OnlineDecision { local: 0, grid: e };
        }
        if !demand {
            return OnlineDecision::default();
        }
        self.zeta += *prices.local() - *spot;
        if self.switch_at.as_ref().is_some_and(|s| self.zeta >= *s) {
            self.committed_to_grid = true;
            OnlineDecision { local: 0, grid: 1 }
        } else {
            OnlineDecision { local: 1, grid: 0 }
        }
    }

    /// Pushes the layer to the grid for good, leaving `zeta` untouched.
    pub fn force_grid(&mut self) {
        self.committed_to_grid = true;
    }
}

/// Output of one online slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnlineDecision {
    pub local: u64,
    pub grid: u64,
}

/// Pure form of [`LayerState::step`].
pub fn threshold_step(
    state: &LayerState,
    demand: bool,
    spot: &Rational,
    prices: &PriceModel,
) -> (LayerState, OnlineDecision) {
    let mut next = state.clone();
    let decision = next.step(demand, spot, prices);
    (next, decision)
}

/// Runs the threshold rule `A_s` on a binary layer.
pub fn run_threshold_k(
    trace_k: &DemandTrace,
    prices: &PriceModel,
    threshold: Threshold,
) -> Result<Schedule> {
    trace_k.require_binary()?;
    ensure_len("price series", trace_k.horizon(), prices.horizon())?;
    let mut state = LayerState::new(threshold, prices);
    let mut schedule = Schedule::zeros(trace_k.horizon());
    for (t, (&e, spot)) in trace_k.values().iter().zip(prices.spot()).enumerate() {
        let d = state.step(e == 1, spot, prices);
        schedule.local[t] = d.local;
        schedule.grid[t] = d.grid;
    }
    Ok(schedule)
}

/// Break-even dispatch of a binary layer (`s = 1`).
pub fn run_bed_k(trace_k: &DemandTrace, prices: &PriceModel) -> Result<Schedule> {
    run_threshold_k(trace_k, prices, Threshold::break_even())
}

/// Probability that the randomized threshold is `Never`: `beta / (e - 1 + beta)`.
pub fn never_switch_probability(beta: f64) -> f64 {
    beta / (std::f64::consts::E - 1.0 + beta)
}

/// Draws `s` from the density `e^s / (e - 1 + beta)` on `[0, 1]` plus an
/// atom at infinity of mass `beta / (e - 1 + beta)`.
pub fn sample_threshold_f64<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let atom: f64 = rng.random();
    if atom < never_switch_probability(beta) {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    (1.0 + u * (std::f64::consts::E - 1.0)).ln()
}

pub fn sample_threshold<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<Threshold> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(DispatchError::Domain(format!("beta {beta} outside [0, 1]")));
    }
    Threshold::from_f64(sample_threshold_f64(beta, rng))
}

/// Seeded draw; the same seed always yields the same threshold.
pub fn sample_threshold_seeded(beta: f64, seed: u64) -> Result<Threshold> {
    sample_threshold(beta, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn beta_f64(prices: &PriceModel) -> f64 {
    crate::rational::to_f64(&prices.beta())
}

/// Randomized dispatch of a binary layer: one threshold drawn per cycle.
pub fn run_red_k(trace_k: &DemandTrace, prices: &PriceModel, seed: u64) -> Result<Schedule> {
    let threshold = sample_threshold_seeded(beta_f64(prices), seed)?;
    run_threshold_k(trace_k, prices, threshold)
}

/// A dispatcher that decides one slot at a time from past and current
/// inputs only.
pub trait OnlineDispatcher: Clone {
    fn step(&mut self, demand: u64, spot: &Rational) -> OnlineDecision;
}

/// Layered threshold dispatch for integer demand under a capacity limit.
///
/// Layers are created lazily the first time demand reaches them, so the
/// dispatcher never needs to know the cycle's peak in advance.
#[derive(Debug, Clone)]
pub struct LayeredDispatcher {
    prices: PriceModel,
    capacity: u64,
    threshold: Threshold,
    layers: Vec<LayerState>,
}

impl LayeredDispatcher {
    pub fn new(prices: &PriceModel, capacity: u64, threshold: Threshold) -> Self {
        Self {
            prices: prices.clone(),
            capacity,
            threshold,
            layers: Vec::new(),
        }
    }

    pub fn layers(&self) -> &[LayerState] {
        &self.layers
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }
}

impl OnlineDispatcher for LayeredDispatcher {
    fn step(&mut self, demand: u64, spot: &Rational) -> OnlineDecision {
        while (self.layers.len() as u64) < demand {
            self.layers
                .push(LayerState::new(self.threshold, &self.prices));
        }
        let forced = demand.saturating_sub(self.capacity);
        let mut out = OnlineDecision::default();
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let level = k as u64 + 1;
            let d = if level <= forced {
                layer.force_grid();
                OnlineDecision { local: 0, grid: 1 }
            } else {
                layer.step(level <= demand, spot, &self.prices)
            };
            out.local += d.local;
            out.grid += d.grid;
        }
        debug_assert!(out.local <= self.capacity);
        debug_assert_eq!(out.local + out.grid, demand);
        out
    }
}

/// Feeds a whole trace through an online dispatcher.
pub fn run_online<D: OnlineDispatcher>(
    dispatcher: &mut D,
    trace: &DemandTrace,
    prices: &PriceModel,
) -> Result<Schedule> {
    ensure_len("price series", trace.horizon(), prices.horizon())?;
    let mut schedule = Schedule::zeros(trace.horizon());
    for (t, (&e, spot)) in trace.values().iter().zip(prices.spot()).enumerate() {
        let d = dispatcher.step(e, spot);
        schedule.local[t] = d.local;
        schedule.grid[t] = d.grid;
    }
    Ok(schedule)
}

pub fn run_layered(
    trace: &DemandTrace,
    prices: &PriceModel,
    capacity: u64,
    threshold: Threshold,
) -> Result<Schedule> {
    run_online(
        &mut LayeredDispatcher::new(prices, capacity, threshold),
        trace,
        prices,
    )
}

/// Break-even dispatch for integer demand.
pub fn run_bed(trace: &DemandTrace, prices: &PriceModel, capacity: u64) -> Result<Schedule> {
    run_layered(trace, prices, capacity, Threshold::break_even())
}

/// Randomized dispatch for integer demand; all layers share one threshold.
pub fn run_red(
    trace: &DemandTrace,
    prices: &PriceModel,
    capacity: u64,
    seed: u64,
) -> Result<Schedule> {
    let threshold = sample_threshold_seeded(beta_f64(prices), seed)?;
    run_layered(trace, prices, capacity, threshold)
}
