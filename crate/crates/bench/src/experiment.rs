//! One billing cycle: every requested algorithm on the same instance.

use std::fmt;

use num_traits::Zero;
use peakdispatch::analysis::{cost_ratio, Instance};
use peakdispatch::online_ramp::run_nrbf_with_forecast;
use peakdispatch::rational::to_f64;
use peakdispatch::{
    check_feasibility, evaluate_cost, offline_fspaed, offline_paed_dp, run_bed, run_red,
    BaseAlgorithm, CostBreakdown, DemandForecast, DemandTrace, GeneratorSpec, PerfectForecast,
    PriceModel, Rational, Schedule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, RunConfig, TraceSource};
use crate::error::{BenchError, Result};
use crate::synth::synth_trace;
use crate::traces::{build_prices, load_traces, tariff_series, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Everything from the grid.
    Benchmark,
    /// Per slot, the cheaper source up to capacity; ignores the peak charge.
    PeakOblivious,
    Bed,
    Red,
    NrbfBed,
    NrbfRed,
    /// Optimum for the generator's constraint set.
    Offline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Benchmark,
        Algorithm::PeakOblivious,
        Algorithm::Bed,
        Algorithm::Red,
        Algorithm::NrbfBed,
        Algorithm::NrbfRed,
        Algorithm::Offline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Benchmark => "benchmark",
            Algorithm::PeakOblivious => "peak-oblivious",
            Algorithm::Bed => "bed",
            Algorithm::Red => "red",
            Algorithm::NrbfBed => "nrbf-bed",
            Algorithm::NrbfRed => "nrbf-red",
            Algorithm::Offline => "offline",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    fn ignores_ramping(&self) -> bool {
        matches!(self, Algorithm::Bed | Algorithm::Red)
    }

    fn is_reference(&self) -> bool {
        matches!(self, Algorithm::Benchmark | Algorithm::PeakOblivious)
    }

    /// Rows produced when the config does not list algorithms.
    pub fn defaults(gen: &GeneratorSpec) -> Vec<Algorithm> {
        Self::ALL
            .into_iter()
            .filter(|a| gen.is_fast() || !a.ignores_ramping())
            .collect()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cost of one algorithm, its saving against the grid-only benchmark and its
/// ratio to the offline optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub cost: CostBreakdown,
    /// `1 - total / benchmark_total`.
    pub reduction: f64,
    /// `total / offline_total`.
    pub ratio: f64,
}

/// Builds the trace, prices and generator named by the config.
pub fn build_instance(config: &ExperimentConfig) -> Result<Instance> {
    config.validate()?;
    let (trace, prices) = match &config.trace {
        TraceSource::Files {
            demand,
            renewable,
            prices,
        } => load_traces(demand, renewable.as_deref(), prices.as_deref(), config)?,
        TraceSource::Synthetic(spec) => {
            let synth = synth_trace(spec, config.quantum.0)?;
            let slots: Vec<Timestamp> = (0..spec.slots as i64).map(Timestamp::Slot).collect();
            let spot = tariff_series(&slots, config)?;
            (synth.net, build_prices(&spot, config)?)
        }
    };
    let generator = config.generator.resolve(trace.peak())?;
    Ok(Instance {
        trace,
        prices,
        generator,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let instance = build_instance(config)?;
    run_on_instance(&instance, &config.run)
}

/// Zero-mean Gaussian forecast error with standard deviation
/// `noise * actual`, rounded and clipped at zero.
#[derive(Debug, Clone)]
pub struct NoisyForecast {
    rng: ChaCha8Rng,
    noise: f64,
}

impl NoisyForecast {
    pub fn new(noise: f64, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
        }
    }
}

impl DemandForecast for NoisyForecast {
    fn forecast(&mut self, _now: usize, _slot: usize, actual: u64) -> u64 {
        let z: f64 = self.rng.sample(StandardNormal);
        let x = actual as f64 * (1.0 + self.noise * z);
        x.round().max(0.0) as u64
    }
}

const NOISE_SALT: u64 = 0x6e6f_6973_655f_7374;

/// Seed of randomized trial `i`.
pub fn trial_seed(base: u64, i: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

fn peak_oblivious(trace: &DemandTrace, prices: &PriceModel, capacity: u64) -> Schedule {
    let mut s = Schedule::grid_only(trace);
    for (t, &e) in trace.values().iter().enumerate() {
        if prices.spot_at(t) > prices.local() {
            let u = e.min(capacity);
            s.local[t] = u;
            s.grid[t] = e - u;
        }
    }
    s
}

fn nrbf(
    inst: &Instance,
    base: BaseAlgorithm,
    noise: f64,
    noise_seed: u64,
) -> peakdispatch::Result<Schedule> {
    if noise > 0.0 {
        let mut f = NoisyForecast::new(noise, noise_seed ^ NOISE_SALT);
        run_nrbf_with_forecast(&inst.trace, &inst.prices, &inst.generator, base, &mut f)
    } else {
        run_nrbf_with_forecast(
            &inst.trace,
            &inst.prices,
            &inst.generator,
            base,
            &mut PerfectForecast,
        )
    }
}

fn offline(inst: &Instance) -> peakdispatch::Result<Schedule> {
    if inst.generator.is_fast() {
        offline_fspaed(&inst.trace, &inst.prices, inst.generator.capacity())
    } else {
        offline_paed_dp(&inst.trace, &inst.prices, &inst.generator)
    }
}

/// Rejects algorithm lists the generator cannot support.
pub fn check_plan(inst: &Instance, algorithms: &[Algorithm]) -> Result<()> {
    let gen = &inst.generator;
    if !gen.is_fast() {
        if let Some(a) = algorithms.iter().find(|a| a.ignores_ramping()) {
            return Err(BenchError::Config(format!(
                "{a} ignores ramp limits but the generator needs {} slots to ramp up",
                gen.ramp_slots()
            )));
        }
    }
    let needs_window = algorithms
        .iter()
        .any(|a| matches!(a, Algorithm::NrbfBed | Algorithm::NrbfRed));
    if needs_window && gen.lookahead() + 1 < gen.ramp_slots() {
        return Err(BenchError::Config(format!(
            "lookahead {} is shorter than {} slots",
            gen.lookahead(),
            gen.ramp_slots() - 1
        )));
    }
    Ok(())
}

fn validated(inst: &Instance, algorithm: Algorithm, schedule: Schedule) -> Result<CostBreakdown> {
    let enforce = !algorithm.is_reference() && !algorithm.ignores_ramping();
    let violations = check_feasibility(&schedule, &inst.trace, &inst.generator, enforce)?;
    if let Some(v) = violations.first() {
        return Err(BenchError::Validation(format!(
            "{algorithm} produced an infeasible schedule: {v} ({} violations)",
            violations.len()
        )));
    }
    Ok(evaluate_cost(&schedule, &inst.prices)?)
}

fn mean_over_trials(
    inst: &Instance,
    algorithm: Algorithm,
    run: &RunConfig,
    mut one: impl FnMut(u64) -> peakdispatch::Result<Schedule>,
) -> Result<CostBreakdown> {
    let costs = (0..run.red_trials)
        .map(|i| validated(inst, algorithm, one(trial_seed(run.seed, i))?))
        .collect::<Result<Vec<_>>>()?;
    CostBreakdown::mean(&costs).ok_or_else(|| BenchError::Config("no trials".into()))
}

/// Runs the configured algorithms on a prepared instance. Rows follow
/// [`Algorithm::ALL`] order.
pub fn run_on_instance(inst: &Instance, run: &RunConfig) -> Result<Vec<ResultRow>> {
    let mut algorithms = run
        .algorithms
        .clone()
        .unwrap_or_else(|| Algorithm::defaults(&inst.generator));
    algorithms.sort();
    algorithms.dedup();
    check_plan(inst, &algorithms)?;

    let capacity = inst.generator.capacity();
    let (trace, prices) = (&inst.trace, &inst.prices);
    let benchmark = validated(inst, Algorithm::Benchmark, Schedule::grid_only(trace))?;
    let optimum = validated(inst, Algorithm::Offline, offline(inst)?)?;

    let mut rows = Vec::with_capacity(algorithms.len());
    for &algorithm in &algorithms {
        log::debug!("running {algorithm}");
        let cost = match algorithm {
            Algorithm::Benchmark => benchmark.clone(),
            Algorithm::Offline => optimum.clone(),
            Algorithm::PeakOblivious => {
                validated(inst, algorithm, peak_oblivious(trace, prices, capacity))?
            }
            Algorithm::Bed => validated(inst, algorithm, run_bed(trace, prices, capacity)?)?,
            Algorithm::Red => mean_over_trials(inst, algorithm, run, |seed| {
                run_red(trace, prices, capacity, seed)
            })?,
            Algorithm::NrbfBed => validated(
                inst,
                algorithm,
                nrbf(inst, BaseAlgorithm::Bed, run.noise, run.seed)?,
            )?,
            Algorithm::NrbfRed => mean_over_trials(inst, algorithm, run, |seed| {
                nrbf(inst, BaseAlgorithm::Red { seed }, run.noise, seed)
            })?,
        };
        if cost.total < optimum.total {
            return Err(BenchError::Validation(format!(
                "{algorithm} costs {} below the offline optimum {}",
                cost.total, optimum.total
            )));
        }
        rows.push(ResultRow {
            algorithm,
            reduction: reduction(&cost.total, &benchmark.total),
            ratio: cost_ratio(&cost.total, &optimum.total),
            cost,
        });
    }
    Ok(rows)
}

fn reduction(total: &Rational, benchmark: &Rational) -> f64 {
    if benchmark.is_zero() {
        0.0
    } else {
        1.0 - to_f64(&(*total / *benchmark))
    }
}
