use num_traits::{One, Zero};
use peakdispatch::analysis::{f_star_atom, ratio_h};
use peakdispatch::offline::{
    brute_force_fspaed_k, compute_critical_capacity, offline_fspaed, offline_fspaed_k,
    offline_paed_dp,
};
use peakdispatch::online_fast::{
    never_switch_probability, run_bed, run_bed_k, run_layered, run_threshold_k,
    sample_threshold_f64, Threshold,
};
use peakdispatch::online_ramp::{
    check_ramp_feasible, neutralize_ramping, run_nrbf, BaseAlgorithm,
};
use peakdispatch::rational::{int, Rational};
use peakdispatch::{
    check_feasibility, evaluate_cost, layer_demand, DemandTrace, GeneratorSpec, GeneratorStart,
    PriceModel, Schedule,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tenths(n: i128) -> Rational {
    Rational::new(n, 10)
}

/// Demand trace with matching prices: local price 1, spot in tenths.
#[derive(Debug, Clone)]
struct Case {
    trace: DemandTrace,
    prices: PriceModel,
}

fn case(max_len: usize, max_demand: u64) -> impl Strategy<Value = Case> {
    (1..=max_len)
        .prop_flat_map(move |len| {
            (
                prop::collection::vec(0..=max_demand, len),
                prop::collection::vec(0i128..=10, len),
                prop::sample::select(vec![0i128, 5, 10, 20, 35, 70]),
            )
        })
        .prop_map(|(demand, spot, peak)| {
            let spot: Vec<Rational> = spot.into_iter().map(tenths).collect();
            let floor = *spot.iter().min().unwrap();
            let prices =
                PriceModel::new(spot, Rational::one(), tenths(peak), floor, Rational::one())
                    .unwrap();
            Case {
                trace: DemandTrace::new(demand).unwrap(),
                prices,
            }
        })
}

fn binary_case(max_len: usize) -> impl Strategy<Value = Case> {
    case(max_len, 1)
}

fn cost(schedule: &Schedule, prices: &PriceModel) -> Rational {
    evaluate_cost(schedule, prices).unwrap().total
}

/// Exhaustive search over every generator output sequence; the grid covers
/// the remainder.
fn brute_force_ramped(trace: &DemandTrace, prices: &PriceModel, gen: &GeneratorSpec) -> Rational {
    let c = gen.capacity();
    let t_len = trace.horizon();
    let levels = (c + 1) as usize;
    let mut best: Option<Rational> = None;
    let mut u = vec![0u64; t_len];
    for code in 0..levels.pow(t_len as u32) {
        let mut x = code;
        for slot in u.iter_mut() {
            *slot = (x % levels) as u64;
            x /= levels;
        }
        let mut prev = match gen.start() {
            GeneratorStart::Free => None,
            GeneratorStart::At(s) => Some(s),
        };
        let mut ok = true;
        for &level in &u {
            if let Some(p) = prev {
                if level > p + gen.ramp_up() || p > level + gen.ramp_down() {
                    ok = false;
                    break;
                }
            }
            prev = Some(level);
        }
        if !ok {
            continue;
        }
        let grid: Vec<u64> = trace
            .values()
            .iter()
            .zip(&u)
            .map(|(&e, &l)| e.saturating_sub(l))
            .collect();
        let total = cost(&Schedule::new(u.clone(), grid).unwrap(), prices);
        if best.is_none_or(|b| total < b) {
            best = Some(total);
        }
    }
    best.unwrap()
}

fn pad_zeros(c: &Case, extra: usize) -> Case {
    let mut demand = c.trace.values().to_vec();
    demand.extend(std::iter::repeat_n(0, extra));
    let mut spot = c.prices.spot().to_vec();
    spot.extend(std::iter::repeat_n(Rational::new(3, 10), extra));
    let prices = PriceModel::new(
        spot,
        *c.prices.local(),
        *c.prices.peak(),
        *c.prices.spot_floor(),
        Rational::one(),
    )
    .unwrap();
    Case {
        trace: DemandTrace::new(demand).unwrap(),
        prices,
    }
}

/// First slot at which the accumulated deficit reaches `p_m`.
fn expected_commit(c: &Case) -> Option<usize> {
    let mut zeta = Rational::zero();
    for (t, (&e, p)) in c.trace.values().iter().zip(c.prices.spot()).enumerate() {
        if e == 1 {
            zeta += *c.prices.local() - *p;
            if zeta >= *c.prices.peak() {
                return Some(t);
            }
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn layer_optimum_matches_enumeration(c in binary_case(12)) {
        let fast = offline_fspaed_k(&c.trace, &c.prices).unwrap();
        let brute = brute_force_fspaed_k(&c.trace, &c.prices).unwrap();
        prop_assert_eq!(cost(&fast, &c.prices), cost(&brute, &c.prices));
    }

    #[test]
    fn integer_optimum_matches_exhaustive_search(c in case(5, 3), cap in 0u64..=3) {
        let gen = GeneratorSpec::fast(cap).with_start(GeneratorStart::Free);
        let exact = cost(&offline_fspaed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
        prop_assert_eq!(exact, brute_force_ramped(&c.trace, &c.prices, &gen));
    }

    #[test]
    fn ramped_optimum_matches_exhaustive_search(
        c in case(5, 3),
        cap in 1u64..=3,
        ramp in 1u64..=3,
        cold in any::<bool>(),
    ) {
        let ramp = ramp.min(cap);
        let start = if cold { GeneratorStart::At(0) } else { GeneratorStart::Free };
        let gen = GeneratorSpec::new(cap, ramp).unwrap().with_start(start);
        let dp = offline_paed_dp(&c.trace, &c.prices, &gen).unwrap();
        prop_assert!(check_feasibility(&dp, &c.trace, &gen, true).unwrap().is_empty());
        prop_assert_eq!(cost(&dp, &c.prices), brute_force_ramped(&c.trace, &c.prices, &gen));
    }

    #[test]
    fn layers_rebuild_demand(c in case(12, 6)) {
        let layers = layer_demand(&c.trace);
        prop_assert_eq!(layers.len() as u64, c.trace.peak());
        for t in 0..c.trace.horizon() {
            let sum: u64 = layers.iter().map(|l| l.get(t)).sum();
            prop_assert_eq!(sum, c.trace.get(t));
            for pair in layers.windows(2) {
                prop_assert!(pair[0].get(t) >= pair[1].get(t));
            }
        }
    }

    #[test]
    fn integer_optimum_is_sum_of_layer_optima(c in case(10, 5)) {
        let whole = cost(&offline_fspaed(&c.trace, &c.prices, c.trace.peak()).unwrap(), &c.prices);
        let parts: Rational = layer_demand(&c.trace)
            .iter()
            .map(|l| cost(&offline_fspaed_k(l, &c.prices).unwrap(), &c.prices))
            .sum();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn uncapped_bed_is_sum_of_layer_runs(c in case(10, 5)) {
        let whole = run_bed(&c.trace, &c.prices, c.trace.peak()).unwrap();
        let mut sum = Schedule::zeros(c.trace.horizon());
        for layer in layer_demand(&c.trace) {
            sum.add(&run_bed_k(&layer, &c.prices).unwrap()).unwrap();
        }
        prop_assert_eq!(&whole, &sum);
        let parts = evaluate_cost(&whole, &c.prices).unwrap();
        prop_assert_eq!(parts.total, parts.grid_volume + parts.peak_charge + parts.local_cost);
    }

    #[test]
    fn trailing_zero_demand_changes_nothing(c in case(10, 4), extra in 1usize..6, cap in 0u64..=4) {
        let padded = pad_zeros(&c, extra);
        let off = cost(&offline_fspaed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
        let off_padded = cost(&offline_fspaed(&padded.trace, &padded.prices, cap).unwrap(), &padded.prices);
        prop_assert_eq!(off, off_padded);
        let on = cost(&run_bed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
        let on_padded = cost(&run_bed(&padded.trace, &padded.prices, cap).unwrap(), &padded.prices);
        prop_assert_eq!(on, on_padded);
    }

    #[test]
    fn more_capacity_never_costs_more(c in case(10, 5)) {
        let mut last: Option<Rational> = None;
        for cap in 0..=c.trace.peak() + 1 {
            let now = cost(&offline_fspaed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
            if let Some(prev) = last {
                prop_assert!(now <= prev);
            }
            last = Some(now);
        }
    }

    #[test]
    fn critical_capacity_is_enough(c in case(10, 5)) {
        let c_tilde = compute_critical_capacity(&c.trace, &c.prices).unwrap().c_tilde;
        prop_assert!(c_tilde <= c.trace.peak());
        let unlimited = cost(&offline_fspaed(&c.trace, &c.prices, c.trace.peak()).unwrap(), &c.prices);
        for cap in c_tilde..=c.trace.peak() + 2 {
            let at = cost(&offline_fspaed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
            prop_assert_eq!(at, unlimited);
        }
    }

    #[test]
    fn ramping_never_helps(c in case(8, 4), cap in 1u64..=4, ramp in 1u64..=4) {
        let ramp = ramp.min(cap);
        let free = cost(&offline_fspaed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
        let gen = GeneratorSpec::new(cap, ramp).unwrap();
        let dp_cold = cost(&offline_paed_dp(&c.trace, &c.prices, &gen).unwrap(), &c.prices);
        let dp_free = cost(
            &offline_paed_dp(&c.trace, &c.prices, &gen.with_start(GeneratorStart::Free)).unwrap(),
            &c.prices,
        );
        prop_assert!(free <= dp_free);
        prop_assert!(dp_free <= dp_cold);
        let fast = cost(
            &offline_paed_dp(&c.trace, &c.prices, &GeneratorSpec::fast(cap).with_start(GeneratorStart::Free)).unwrap(),
            &c.prices,
        );
        prop_assert_eq!(fast, free);
    }

    #[test]
    fn online_decisions_depend_only_on_the_past(c in case(12, 5), cut in 1usize..12, cap in 0u64..=5) {
        let cut = cut.min(c.trace.horizon());
        let full = run_bed(&c.trace, &c.prices, cap).unwrap();
        let prefix = DemandTrace::new(c.trace.values()[..cut].to_vec()).unwrap();
        let short = run_bed(&prefix, &c.prices.truncated(cut).unwrap(), cap).unwrap();
        prop_assert_eq!(&full.local[..cut], &short.local[..]);
        prop_assert_eq!(&full.grid[..cut], &short.grid[..]);
    }

    #[test]
    fn layer_commits_once_at_break_even(c in binary_case(12)) {
        let s = run_bed_k(&c.trace, &c.prices).unwrap();
        let commit = expected_commit(&c);
        for t in 0..c.trace.horizon() {
            prop_assert_eq!(s.local[t] + s.grid[t], c.trace.get(t));
            let on_grid = commit.is_some_and(|k| t >= k);
            prop_assert_eq!(s.grid[t], u64::from(on_grid && c.trace.get(t) == 1));
        }
    }

    #[test]
    fn infinite_threshold_stays_local(c in binary_case(12)) {
        let s = run_threshold_k(&c.trace, &c.prices, Threshold::Never).unwrap();
        prop_assert_eq!(s.grid.iter().sum::<u64>(), 0);
        let zero = run_threshold_k(&c.trace, &c.prices, Threshold::Finite(Rational::zero())).unwrap();
        prop_assert_eq!(zero.local.iter().sum::<u64>(), 0);
    }

    #[test]
    fn online_respects_capacity(c in case(12, 6), cap in 0u64..=6, s in 0i128..=20) {
        let s = run_layered(&c.trace, &c.prices, cap, Threshold::Finite(tenths(s))).unwrap();
        let gen = GeneratorSpec::fast(cap);
        prop_assert!(check_feasibility(&s, &c.trace, &gen, false).unwrap().is_empty());
        for t in 0..c.trace.horizon() {
            prop_assert_eq!(s.local[t] + s.grid[t], c.trace.get(t));
        }
    }

    #[test]
    fn bed_within_deterministic_ratio(c in case(12, 5), cap in 0u64..=5) {
        let on = cost(&run_bed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
        let off = cost(&offline_fspaed(&c.trace, &c.prices, cap).unwrap(), &c.prices);
        let beta = c.prices.beta();
        prop_assert!(on <= (int(2) - beta) * off, "online {} offline {} beta {}", on, off, beta);
    }

    #[test]
    fn ramp_adjustment_properties(c in case(12, 6), cap in 1u64..=6, ramp in 1u64..=6) {
        let ramp = ramp.min(cap);
        let gen = GeneratorSpec::new(cap, ramp).unwrap().with_start(GeneratorStart::Free);
        let relaxed = run_bed(&c.trace, &c.prices, cap).unwrap();
        let adjusted = run_nrbf(&c.trace, &c.prices, &gen, BaseAlgorithm::Bed).unwrap();
        prop_assert!(check_ramp_feasible(&adjusted, &gen));
        prop_assert!(check_feasibility(&adjusted, &c.trace, &gen, true).unwrap().is_empty());
        for t in 0..c.trace.horizon() {
            prop_assert!(adjusted.grid[t] <= relaxed.grid[t]);
            prop_assert!(adjusted.local[t] >= relaxed.local[t]);
        }
        let offline = neutralize_ramping(&relaxed.local, &c.trace, &gen).unwrap();
        prop_assert_eq!(&adjusted, &offline);

        let gamma = int(gen.ramp_slots() as i128);
        let beta = c.prices.beta();
        let on = cost(&adjusted, &c.prices);
        let dp = cost(&offline_paed_dp(&c.trace, &c.prices, &gen).unwrap(), &c.prices);
        prop_assert!(on <= gamma * (int(2) - beta) * dp);
    }

    #[test]
    fn pinned_start_is_ramp_feasible(c in case(12, 6), cap in 1u64..=6, ramp in 1u64..=6, start in 0u64..=6) {
        let ramp = ramp.min(cap);
        let gen = GeneratorSpec::new(cap, ramp)
            .unwrap()
            .with_start(GeneratorStart::At(start.min(cap)));
        let adjusted = run_nrbf(&c.trace, &c.prices, &gen, BaseAlgorithm::Red { seed: 7 }).unwrap();
        prop_assert!(check_feasibility(&adjusted, &c.trace, &gen, true).unwrap().is_empty());
    }

    #[test]
    fn ratio_never_below_one(s in 0.0f64..10.0, sigma in 0.0f64..10.0, beta in 0.0f64..=1.0) {
        prop_assert!(ratio_h(s, sigma, beta) >= 1.0 - 1e-12);
        prop_assert!(ratio_h(f64::INFINITY, sigma, beta) >= 1.0 - 1e-12);
    }
}

#[test]
fn threshold_sampler_matches_distribution() {
    let beta = 0.3;
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut finite = Vec::with_capacity(n);
    let mut never = 0usize;
    for _ in 0..n {
        let s = sample_threshold_f64(beta, &mut rng);
        if s.is_infinite() {
            never += 1;
        } else {
            assert!((0.0..=1.0).contains(&s));
            finite.push(s);
        }
    }
    let atom = never as f64 / n as f64;
    assert!((atom - f_star_atom(beta)).abs() < 0.01);
    assert!((never_switch_probability(beta) - f_star_atom(beta)).abs() < 1e-15);

    // Kolmogorov-Smirnov distance of the full sample, atom placed above 1.
    finite.sort_by(f64::total_cmp);
    let cdf = |s: f64| (s.exp() - 1.0) / (std::f64::consts::E - 1.0 + beta);
    let mut d: f64 = 0.0;
    for (i, &s) in finite.iter().enumerate() {
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        d = d.max((cdf(s) - lo).abs()).max((hi - cdf(s)).abs());
    }
    println!("KS distance {d:.5}");
    assert!(d < 0.01);
}
