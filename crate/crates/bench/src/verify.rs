//! Analytic and oracle checks behind the `verify` subcommand.

use num_traits::One;
use peakdispatch::analysis::{
    deterministic_ratio, linear_grid, optimal_deterministic_s, verify_randomized_cr,
    verify_yao_bound,
};
use peakdispatch::offline::{brute_force_fspaed_k, offline_fspaed_k};
use peakdispatch::online_ramp::ramping_lower_bound;
use peakdispatch::{evaluate_cost, DemandTrace, GeneratorSpec, PriceModel, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `beta = 0, 0.1, ..., 1`.
pub fn beta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Random binary layer with spot prices in `[floor, 1]` on a 1/20 grid and
/// local price 1.
pub fn random_binary_instance(rng: &mut impl Rng, max_len: usize) -> Result<(DemandTrace, PriceModel)> {
    let len = rng.random_range(1..=max_len);
    let demand: Vec<u64> = (0..len).map(|_| rng.random_range(0..=1)).collect();
    let spot: Vec<Rational> = (0..len)
        .map(|_| Rational::new(rng.random_range(0..=20), 20))
        .collect();
    let floor = *spot.iter().min().expect("non-empty");
    let peak = Rational::new(rng.random_range(0..=200), 20);
    let prices = PriceModel::new(spot, Rational::one(), peak, floor, Rational::one())?;
    Ok((DemandTrace::new(demand)?, prices))
}

fn minmax_checks(out: &mut Vec<Check>) -> Result<()> {
    for beta in beta_grid() {
        let cert = optimal_deterministic_s(beta)?;
        // At beta = 1 every threshold is optimal.
        let argmin_ok = beta == 1.0 || (cert.grid_argmin - 1.0).abs() < 1e-9;
        let ok = argmin_ok
            && (cert.value - cert.grid_min).abs() < 1e-9
            && (cert.value - deterministic_ratio(beta)).abs() < 1e-9;
        out.push(Check {
            name: format!("deterministic min-max, beta={beta:.1}"),
            passed: ok,
            detail: format!(
                "argmin s={:.3}, worst case {:.9} over {} points",
                cert.grid_argmin, cert.grid_min, cert.grid_points
            ),
        });
    }
    Ok(())
}

fn randomized_checks(out: &mut Vec<Check>) -> Result<()> {
    let sigmas = linear_grid(0.2, 5.0);
    let thresholds = linear_grid(0.2, 5.0);
    for beta in beta_grid() {
        let f = verify_randomized_cr(beta, &sigmas)?;
        out.push(Check {
            name: format!("randomized ratio flat in sigma, beta={beta:.1}"),
            passed: f.passed,
            detail: format!("target {:.9}, max error {:.3e}", f.target, f.max_error),
        });
        let g = verify_yao_bound(beta, &thresholds)?;
        out.push(Check {
            name: format!("adversary bound flat in s, beta={beta:.1}"),
            passed: g.passed,
            detail: format!("target {:.9}, max error {:.3e}", g.target, g.max_error),
        });
    }
    Ok(())
}

fn oracle_check(instances: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0usize;
    for _ in 0..instances {
        let (trace, prices) = random_binary_instance(&mut rng, 12)?;
        let fast = evaluate_cost(&offline_fspaed_k(&trace, &prices)?, &prices)?.total;
        let brute = evaluate_cost(&brute_force_fspaed_k(&trace, &prices)?, &prices)?.total;
        if fast != brute {
            mismatches += 1;
        }
    }
    Ok(Check {
        name: "layer optimum equals exhaustive search".into(),
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches over {instances} instances"),
    })
}

fn ramping_check() -> Result<Check> {
    let prices = PriceModel::flat(1, Rational::new(3, 10), Rational::one(), Rational::from_integer(100))?;
    let bound = ramping_lower_bound(&GeneratorSpec::new(5, 1)?, &prices)?;
    Ok(Check {
        name: "ramping lower bound, C=5R, p_m=100 p_g".into(),
        passed: bound == Rational::new(401, 25),
        detail: format!("{bound}"),
    })
}

pub fn run_verification(instances: usize, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    minmax_checks(&mut checks)?;
    randomized_checks(&mut checks)?;
    checks.push(oracle_check(instances, seed)?);
    checks.push(ramping_check()?);
    Ok(VerifyReport { checks })
}
