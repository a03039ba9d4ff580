//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with its
//! measurements and then asserts.

use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use peakdispatch::analysis::{
    adversarial_trace, cost_ratio, linear_grid, optimal_deterministic_s, randomized_ratio,
    verify_randomized_cr, verify_yao_bound, worst_case_ratio, worst_case_ratio_on_grid,
};
use peakdispatch::offline::{
    brute_force_fspaed_k, compute_critical_capacity, offline_fspaed, offline_fspaed_k,
    offline_paed_dp,
};
use peakdispatch::online_fast::{
    run_bed, run_bed_k, run_online, run_red_k, LayeredDispatcher, OnlineDispatcher, Threshold,
};
use peakdispatch::online_ramp::{check_ramp_feasible, ramping_lower_bound, run_nrbf};
use peakdispatch::{
    check_feasibility, evaluate_cost, BaseAlgorithm, DemandTrace, GeneratorSpec, GeneratorStart,
    PriceModel, Rational, Schedule,
};
use peakdispatch_bench::config::ExperimentConfig;
use peakdispatch_bench::experiment::Algorithm;
use peakdispatch_bench::results::render_sweep_csv;
use peakdispatch_bench::{run_sweep, SweepParameter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, title: &str, passed: bool, detail: &str, elapsed: Duration, limit: Duration) {
    let in_time = elapsed < limit;
    let verdict = if passed && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {criterion} [{title}]: {verdict} | {detail} | {:.2?} (limit {:.0?})",
        elapsed, limit
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
    assert!(in_time, "criterion {criterion} exceeded {limit:?}: {elapsed:?}");
}

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn cost(s: &Schedule, prices: &PriceModel) -> Rational {
    evaluate_cost(s, prices).unwrap().total
}

/// Spot prices on a 1/20 grid within `[floor, 1]`, local price 1; the floor
/// is the declared `beta`.
fn random_prices(rng: &mut ChaCha8Rng, len: usize, floor_twentieths: i128, peak: Rational) -> PriceModel {
    let spot: Vec<Rational> = (0..len)
        .map(|_| q(rng.random_range(floor_twentieths..=20), 20))
        .collect();
    PriceModel::new(spot, Rational::one(), peak, q(floor_twentieths, 20), Rational::one()).unwrap()
}

fn random_trace(rng: &mut ChaCha8Rng, len: usize, max: u64) -> DemandTrace {
    DemandTrace::new((0..len).map(|_| rng.random_range(0..=max)).collect()).unwrap()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n = 400;
    let mut mismatches = 0;
    for _ in 0..n {
        let len = rng.random_range(1..=12);
        let floor = rng.random_range(0..=20);
        let peak = q(rng.random_range(0..=120), 20);
        let prices = random_prices(&mut rng, len, floor, peak);
        let trace = random_trace(&mut rng, len, 1);
        let fast = cost(&offline_fspaed_k(&trace, &prices).unwrap(), &prices);
        let brute = cost(&brute_force_fspaed_k(&trace, &prices).unwrap(), &prices);
        if fast != brute {
            mismatches += 1;
        }
    }
    report(
        1,
        "layer optimum equals exhaustive search",
        mismatches == 0,
        &format!("{mismatches} mismatches over {n} binary instances, T <= 12"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_2_deterministic_ratio() {
    let start = Instant::now();
    let (trace, prices) = adversarial_trace(q(1, 1), q(3, 10), 1000, q(1, 1), q(700, 1)).unwrap();
    let on = cost(&run_bed_k(&trace, &prices).unwrap(), &prices);
    let off = cost(&offline_fspaed_k(&trace, &prices).unwrap(), &prices);
    let adversarial = cost_ratio(&on, &off);
    let saturated = (1.69..=1.70).contains(&adversarial);

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=60);
        let peak = q(rng.random_range(0..=400), 20);
        let prices = random_prices(&mut rng, len, 6, peak);
        let trace = random_trace(&mut rng, len, 1);
        let on = cost(&run_bed_k(&trace, &prices).unwrap(), &prices);
        let off = cost(&offline_fspaed_k(&trace, &prices).unwrap(), &prices);
        worst = worst.max(cost_ratio(&on, &off));
    }
    report(
        2,
        "deterministic ratio 2 - beta",
        saturated && worst <= 1.7 + 1e-9,
        &format!("adversarial ratio {adversarial:.6}, worst of 1000 random {worst:.6} (beta 0.3)"),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_3_randomized_ratio() {
    let start = Instant::now();
    let sigmas = linear_grid(0.2, 5.0);
    let thresholds = linear_grid(0.2, 5.0);
    let mut max_error: f64 = 0.0;
    let mut all_passed = true;
    for i in 0..=10 {
        let beta = i as f64 / 10.0;
        let f = verify_randomized_cr(beta, &sigmas).unwrap();
        let g = verify_yao_bound(beta, &thresholds).unwrap();
        all_passed &= f.passed && g.passed;
        max_error = max_error.max(f.max_error).max(g.max_error);
    }

    // RED on adversarial layers for thresholds below, at and above break-even.
    let seeds = 10_000u64;
    let mut worst_mean: f64 = 0.0;
    for s_target in [q(1, 2), q(1, 1), q(2, 1)] {
        let (trace, prices) = adversarial_trace(s_target, q(3, 10), 2000, q(1, 1), q(700, 1)).unwrap();
        let off = cost(&offline_fspaed_k(&trace, &prices).unwrap(), &prices);
        let mut sum = 0.0;
        for seed in 0..seeds {
            let on = cost(&run_red_k(&trace, &prices, seed).unwrap(), &prices);
            sum += cost_ratio(&on, &off);
        }
        worst_mean = worst_mean.max(sum / seeds as f64);
    }
    let target = randomized_ratio(0.3);
    report(
        3,
        "randomized ratio e / (e - 1 + beta)",
        all_passed && max_error < 1e-6 && worst_mean <= 1.3468 + 0.02,
        &format!(
            "max quadrature error {max_error:.2e} over 11 betas x {} points; RED mean ratio {worst_mean:.4} (target {target:.4})",
            sigmas.len()
        ),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_4_minmax_certificate() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for beta in [0.0, 0.3, 0.7] {
        let cert = optimal_deterministic_s(beta).unwrap();
        ok &= (cert.grid_argmin - 1.0).abs() < 1e-9;
        ok &= (cert.grid_min - (2.0 - beta)).abs() < 1e-9;
        ok &= cert.grid_points == 4000;
        detail.push(format!("beta {beta}: min {:.6} at s={:.3}", cert.grid_min, cert.grid_argmin));
    }
    // beta = 0.3 curve: left end 1 + 0.7 / 0.001, right end 1 + 2.8 / 1.9,
    // minimum 1.7 at s = 1.
    let curve: Vec<(f64, f64)> = linear_grid(1e-3, 4.0)
        .into_iter()
        .map(|s| (s, worst_case_ratio(s, 0.3)))
        .collect();
    let (first, last) = (curve[0], curve[curve.len() - 1]);
    ok &= (first.1 - 701.0).abs() < 1e-3;
    ok &= (last.1 - 2.473684).abs() < 1e-3;
    ok &= (worst_case_ratio(1.0, 0.3) - 1.7).abs() < 1e-3;
    // The closed form agrees with a direct maximization over sigma.
    let sigmas = linear_grid(1e-3, 12.0);
    for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
        ok &= (worst_case_ratio_on_grid(s, 0.3, &sigmas) - worst_case_ratio(s, 0.3)).abs() < 1e-9;
    }
    detail.push(format!("beta 0.3 endpoints {:.3} / {:.6}", first.1, last.1));
    report(
        4,
        "deterministic min-max at s = 1",
        ok,
        &detail.join("; "),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_5_layered_structure() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut failures = Vec::new();
    let mut done = 0;
    while done < 500 {
        let len = rng.random_range(2..=40);
        let trace = random_trace(&mut rng, len, 8);
        if trace.peak() == 0 {
            continue;
        }
        let capacity = rng.random_range(0..trace.peak());
        let floor = rng.random_range(0..=20);
        let peak = q(rng.random_range(0..=200), 20);
        let prices = random_prices(&mut rng, len, floor, peak);
        done += 1;

        let mut d = LayeredDispatcher::new(&prices, capacity, Threshold::break_even());
        let mut committed_before: Vec<bool> = Vec::new();
        let mut schedule = Schedule::zeros(len);
        for t in 0..len {
            let e = trace.get(t);
            let out = d.step(e, prices.spot_at(t));
            schedule.local[t] = out.local;
            schedule.grid[t] = out.grid;
            let flags: Vec<bool> = d.layers().iter().map(|l| l.committed_to_grid).collect();
            if committed_before.iter().zip(&flags).any(|(&b, &a)| b && !a) {
                failures.push(format!("layer left the grid at t={t}"));
            }
            if flags.windows(2).any(|w| !w[0] && w[1]) {
                failures.push(format!("grid layers not stacked from the bottom at t={t}"));
            }
            let on_grid = flags.iter().take(e as usize).filter(|&&c| c).count() as u64;
            if on_grid != out.grid || out.local > capacity || out.local + out.grid != e {
                failures.push(format!("slot {t} split {out:?} for demand {e}"));
            }
            committed_before = flags;
        }
        if schedule != run_bed(&trace, &prices, capacity).unwrap() {
            failures.push("stepping and batch runs disagree".into());
        }
        let on = cost(&schedule, &prices);
        let off = cost(&offline_fspaed(&trace, &prices, capacity).unwrap(), &prices);
        if on > (Rational::from_integer(2) - prices.beta()) * off {
            failures.push(format!("cost {on} above (2 - beta) x {off}"));
        }
    }
    report(
        5,
        "layered dispatch structure and ratio",
        failures.is_empty(),
        &format!("{done} instances with C < max e, {} failures {:?}", failures.len(), failures.first()),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_6_ramp_adjustment() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..500 {
        let gamma = 2 + (i % 4) as u64;
        let ramp = rng.random_range(1..=2u64);
        let capacity = rng.random_range((gamma - 1) * ramp + 1..=gamma * ramp);
        let gen = GeneratorSpec::new(capacity, ramp)
            .unwrap()
            .with_start(GeneratorStart::Free);
        assert_eq!(gen.ramp_slots() as u64, gamma);
        let len = rng.random_range(1..=24);
        let trace = random_trace(&mut rng, len, capacity + 3);
        let floor = rng.random_range(0..=20);
        let peak = q(rng.random_range(0..=200), 20);
        let prices = random_prices(&mut rng, len, floor, peak);

        let relaxed = run_bed(&trace, &prices, capacity).unwrap();
        let adjusted = run_nrbf(&trace, &prices, &gen, BaseAlgorithm::Bed).unwrap();
        if !check_ramp_feasible(&adjusted, &gen) {
            failures.push(format!("instance {i}: ramp violation"));
        }
        if !check_feasibility(&adjusted, &trace, &gen, true).unwrap().is_empty() {
            failures.push(format!("instance {i}: infeasible"));
        }
        if adjusted.grid.iter().zip(&relaxed.grid).any(|(a, r)| a > r) {
            failures.push(format!("instance {i}: grid draw above the relaxed schedule"));
        }
        let on = cost(&adjusted, &prices);
        let dp = cost(&offline_paed_dp(&trace, &prices, &gen).unwrap(), &prices);
        let bound = Rational::from_integer(gamma as i128) * (Rational::from_integer(2) - prices.beta());
        if on > bound * dp {
            failures.push(format!("instance {i}: cost {on} above {bound} x {dp}"));
        }
        if !dp.is_zero() {
            worst = worst.max(cost_ratio(&on, &dp));
        }
    }
    let mut identical = 0;
    for _ in 0..500 {
        let len = rng.random_range(1..=30);
        let capacity = rng.random_range(0..=6);
        let trace = random_trace(&mut rng, len, 8);
        let peak = q(rng.random_range(0..=200), 20);
        let prices = random_prices(&mut rng, len, 4, peak);
        let gen = GeneratorSpec::fast(capacity);
        if run_nrbf(&trace, &prices, &gen, BaseAlgorithm::Bed).unwrap()
            == run_bed(&trace, &prices, capacity).unwrap()
        {
            identical += 1;
        }
    }
    report(
        6,
        "ramp adjustment feasibility and cost",
        failures.is_empty() && identical == 500,
        &format!(
            "500 instances Gamma 2..5: {} failures {:?}, worst ratio to ramped optimum {worst:.4}; Gamma = 1 identical to BED on {identical}/500",
            failures.len(),
            failures.first()
        ),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_7_ramping_lower_bound() {
    let start = Instant::now();
    let mut ok = true;
    let mut values = Vec::new();
    for (ramp, local) in [(1u64, q(1, 1)), (3, q(1, 1)), (2, q(17, 100))] {
        let prices = PriceModel::flat(1, Rational::zero(), local, local * q(100, 1)).unwrap();
        let bound = ramping_lower_bound(&GeneratorSpec::new(5 * ramp, ramp).unwrap(), &prices).unwrap();
        ok &= bound == q(401, 25);
        values.push(bound.to_string());
        let fast = ramping_lower_bound(&GeneratorSpec::fast(5 * ramp), &prices).unwrap();
        ok &= fast == Rational::one();
    }
    report(
        7,
        "ramping lower bound",
        ok,
        &format!("Gamma 5 bounds {values:?} (expected 401/25 = 16.04); Gamma 1 gives 1"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_8_offline_cross_checks() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut dp_mismatch = 0;
    for i in 0..100 {
        let len = rng.random_range(1..=30);
        let capacity = rng.random_range(0..=6);
        let trace = random_trace(&mut rng, len, 8);
        let (floor, peak) = (rng.random_range(0..=20), q(rng.random_range(0..=200), 20));
        let prices = random_prices(&mut rng, len, floor, peak);
        let ramp = capacity.max(1) + rng.random_range(0..=2);
        let start = if i % 2 == 0 { GeneratorStart::Free } else { GeneratorStart::At(0) };
        let gen = GeneratorSpec::new(capacity, ramp).unwrap().with_start(start);
        let dp = cost(&offline_paed_dp(&trace, &prices, &gen).unwrap(), &prices);
        let fs = cost(&offline_fspaed(&trace, &prices, capacity).unwrap(), &prices);
        if dp != fs {
            dp_mismatch += 1;
        }
    }
    let mut shape_failures = 0;
    for _ in 0..50 {
        let len = rng.random_range(1..=40);
        let trace = random_trace(&mut rng, len, 10);
        let (floor, peak) = (rng.random_range(0..=20), q(rng.random_range(0..=300), 20));
        let prices = random_prices(&mut rng, len, floor, peak);
        let c_tilde = compute_critical_capacity(&trace, &prices).unwrap().c_tilde;
        let costs: Vec<Rational> = (0..=trace.peak() + 2)
            .map(|c| cost(&offline_fspaed(&trace, &prices, c).unwrap(), &prices))
            .collect();
        let increasing = costs.windows(2).any(|w| w[1] > w[0]);
        let tail = &costs[c_tilde as usize..];
        let flat = tail.iter().all(|c| *c == tail[0]);
        if increasing || !flat {
            shape_failures += 1;
        }
    }
    report(
        8,
        "offline solver cross-checks",
        dp_mismatch == 0 && shape_failures == 0,
        &format!("ramped DP vs capacity-only optimum: {dp_mismatch}/100 mismatches; capacity curve: {shape_failures}/50 failures"),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

const MONTH: &str = r#"
name = "synthetic-month"
quantum = 100

[trace]
kind = "synthetic"
slots = 2880
base = 900.0
amplitude = 450.0
noise_seed = 2024
wind_fraction = 0.25

[prices]
local = "0.17"
peak = "17.56"
slot_minutes = 15
[[prices.tou]]
from_hour = 0
to_hour = 8
price = "0.056"
[[prices.tou]]
from_hour = 8
to_hour = 12
price = "0.116"
[[prices.tou]]
from_hour = 12
to_hour = 18
price = "0.162"
[[prices.tou]]
from_hour = 18
to_hour = 24
price = "0.116"

[generator]
rho = 0.5
start = "free"

[run]
seed = 7
red_trials = 4
algorithms = ["benchmark", "peak-oblivious", "bed", "red", "offline"]

[sweep]
rho = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
"#;

#[test]
fn criterion_9_capacity_sweep() {
    let start = Instant::now();
    let config = ExperimentConfig::from_toml(MONTH).unwrap();
    let report_a = run_sweep(&config, SweepParameter::Rho);
    let offline_monotone = report_a.is_ok();
    let report_a = report_a.expect("offline cost must not rise with capacity");
    let offline = report_a.reductions(Algorithm::Offline).unwrap();
    let bed = report_a.reductions(Algorithm::Bed).unwrap();
    let monotone_check = offline.windows(2).all(|w| w[1] >= w[0] - 1e-12);

    let rerun = run_sweep(&config, SweepParameter::Rho).unwrap();
    let identical = render_sweep_csv(&report_a) == render_sweep_csv(&rerun);
    let flagged = report_a.bed_non_monotone == Some(true);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    report(
        9,
        "capacity sweep and determinism",
        offline_monotone && monotone_check && identical,
        &format!(
            "offline reduction [{}]; BED reduction [{}]; BED non-monotone flagged: {flagged}; rerun byte-identical: {identical}",
            fmt(&offline),
            fmt(&bed)
        ),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn lookahead_window_bounds_dependence() {
    // NRBF at slot t sees demand only up to t + Gamma - 1.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..100 {
        let gen = GeneratorSpec::new(6, 2).unwrap().with_start(GeneratorStart::Free);
        let len = rng.random_range(6..=30);
        let trace = random_trace(&mut rng, len, 8);
        let peak = q(rng.random_range(0..=200), 20);
        let prices = random_prices(&mut rng, len, 5, peak);
        let cut = rng.random_range(1..=len);
        let full = run_nrbf(&trace, &prices, &gen, BaseAlgorithm::Bed).unwrap();
        let prefix = DemandTrace::new(trace.values()[..cut].to_vec()).unwrap();
        let short = run_nrbf(&prefix, &prices.truncated(cut).unwrap(), &gen, BaseAlgorithm::Bed).unwrap();
        let settled = cut.saturating_sub(gen.lookahead());
        assert_eq!(&full.local[..settled], &short.local[..settled]);
        let direct = run_online(
            &mut LayeredDispatcher::new(&prices, 6, Threshold::break_even()),
            &trace,
            &prices,
        )
        .unwrap();
        assert_eq!(direct, run_bed(&trace, &prices, 6).unwrap());
    }
}
