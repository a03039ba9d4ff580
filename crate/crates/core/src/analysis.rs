//! Competitive-ratio analysis of the threshold family.
//!
//! Closed forms for the per-instance ratio `h(A_s, sigma)`, its worst case
//! over `sigma`, the randomized threshold density `f*` and the adversary
//! density `g*`, plus numerical checks that both integrals collapse to
//! `e / (e - 1 + beta)`. Everything here is `f64` with explicit tolerances.

use std::f64::consts::E;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DispatchError, Result};
use crate::model::{evaluate_cost, DemandTrace, GeneratorSpec, PriceModel, Schedule};
use crate::rational::{to_f64, Rational};

pub mod quadrature;

use quadrature::adaptive_simpson;

/// Absolute tolerance handed to the quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;
/// Agreement required between an integral and its closed form.
pub const VERIFY_TOLERANCE: f64 = 1e-6;
/// Truncation point of the `g*` integrals; the tail is added analytically.
pub const SIGMA_TRUNCATION: f64 = 50.0;

/// A threshold `s` paired with the instance-class parameter `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioProfile {
    pub s: f64,
    pub beta: f64,
}

impl RatioProfile {
    pub fn ratio(&self, sigma: f64) -> f64 {
        ratio_h(self.s, sigma, self.beta)
    }

    pub fn worst_case(&self) -> f64 {
        worst_case_ratio(self.s, self.beta)
    }
}

/// `e / (e - 1 + beta)`: the optimal randomized ratio.
pub fn randomized_ratio(beta: f64) -> f64 {
    E / (E - 1.0 + beta)
}

/// `2 - beta`: the optimal deterministic ratio.
pub fn deterministic_ratio(beta: f64) -> f64 {
    2.0 - beta
}

/// Online-to-offline cost ratio of threshold `s` on a binary layer with
/// critical threshold `sigma`. `s = +inf` is the never-switch policy.
/// The corner `sigma = 0`, `s = 0` (no demand) is defined as 1.
pub fn ratio_h(s: f64, sigma: f64, beta: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        ratio_branch(s, sigma, beta, s > sigma)
    }
}

/// `h` on one side of the jump at `s = sigma`; `never` selects the branch
/// where the threshold is not reached.
fn ratio_branch(s: f64, sigma: f64, beta: f64, never: bool) -> f64 {
    if sigma <= 1.0 {
        if never {
            1.0
        } else {
            1.0 + (1.0 - sigma + s) / sigma * (1.0 - beta)
        }
    } else {
        let denom = (sigma - 1.0) * beta + 1.0;
        if never {
            1.0 + (sigma - 1.0) * (1.0 - beta) / denom
        } else {
            1.0 + s * (1.0 - beta) / denom
        }
    }
}

/// `max_sigma h(A_s, sigma)`, attained at `sigma = s`. Infinite for `s = 0`.
pub fn worst_case_ratio(s: f64, beta: f64) -> f64 {
    if s == 0.0 {
        f64::INFINITY
    } else if s <= 1.0 {
        1.0 + (1.0 - beta) / s
    } else if s.is_infinite() {
        if beta == 0.0 {
            f64::INFINITY
        } else {
            1.0 + (1.0 - beta) / beta
        }
    } else {
        1.0 + s * (1.0 - beta) / ((s - 1.0) * beta + 1.0)
    }
}

/// Largest `h(A_s, sigma)` over a grid, as a numeric cross-check of
/// [`worst_case_ratio`].
pub fn worst_case_ratio_on_grid(s: f64, beta: f64, sigmas: &[f64]) -> f64 {
    sigmas
        .iter()
        .map(|&sigma| ratio_h(s, sigma, beta))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Evenly spaced grid `step, 2 step, ..., upper`.
pub fn linear_grid(step: f64, upper: f64) -> Vec<f64> {
    let n = (upper / step).round() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// Result of the min-max search over deterministic thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxCertificate {
    pub beta: f64,
    /// Closed-form optimum, `s = 1`.
    pub s_opt: f64,
    pub value: f64,
    /// Grid point with the smallest worst-case ratio.
    pub grid_argmin: f64,
    pub grid_min: f64,
    pub grid_points: usize,
}

/// Returns `s = 1` and confirms it by scanning `s in (0, 4]` at step `1e-3`.
pub fn optimal_deterministic_s(beta: f64) -> Result<MinMaxCertificate> {
    check_beta(beta)?;
    let grid = linear_grid(1e-3, 4.0);
    let (grid_argmin, grid_min) = grid
        .iter()
        .map(|&s| (s, worst_case_ratio(s, beta)))
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });
    Ok(MinMaxCertificate {
        beta,
        s_opt: 1.0,
        value: worst_case_ratio(1.0, beta),
        grid_argmin,
        grid_min,
        grid_points: grid.len(),
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(DispatchError::Domain(format!("beta {beta} outside [0, 1]")))
    }
}

/// Continuous part of the randomized threshold density on `[0, 1]`.
pub fn f_star_density(s: f64, beta: f64) -> f64 {
    if (0.0..=1.0).contains(&s) {
        s.exp() / (E - 1.0 + beta)
    } else {
        0.0
    }
}

/// Mass of the never-switch atom of `f*`.
pub fn f_star_atom(beta: f64) -> f64 {
    beta / (E - 1.0 + beta)
}

/// Adversary density over `sigma` used for the lower bound.
pub fn g_star_density(sigma: f64, beta: f64) -> f64 {
    let k = E / (E - 1.0 + beta);
    if sigma < 0.0 {
        0.0
    } else if sigma <= 1.0 {
        k * sigma * (-sigma).exp()
    } else {
        k * ((sigma - 1.0) * beta + 1.0) * (-sigma).exp()
    }
}

/// `int_0^1 f* ds + atom`.
pub fn f_star_mass(beta: f64) -> Result<f64> {
    let cont = adaptive_simpson(|s| f_star_density(s, beta), 0.0, 1.0, QUADRATURE_TOLERANCE)?;
    Ok(cont + f_star_atom(beta))
}

/// `int_a^inf K ((sigma - 1) beta + 1 + c) e^-sigma d sigma` for `a >= 1`.
fn g_star_tail(a: f64, beta: f64, extra: f64) -> f64 {
    let k = E / (E - 1.0 + beta);
    k * (-a).exp() * ((a - 1.0) * beta + 1.0 + beta + extra)
}

/// `int_0^inf g*(sigma) d sigma`.
pub fn g_star_mass(beta: f64) -> Result<f64> {
    let head = adaptive_simpson(|x| g_star_density(x, beta), 0.0, 1.0, QUADRATURE_TOLERANCE)?
        + adaptive_simpson(
            |x| g_star_density(x, beta),
            1.0,
            SIGMA_TRUNCATION,
            QUADRATURE_TOLERANCE,
        )?;
    Ok(head + g_star_tail(SIGMA_TRUNCATION, beta, 0.0))
}

/// One grid point of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedPoint {
    pub at: f64,
    pub value: f64,
    pub error: f64,
}

/// Integrals evaluated over a grid against the closed form `e / (e - 1 + beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrReport {
    pub beta: f64,
    pub target: f64,
    pub points: Vec<VerifiedPoint>,
    pub max_error: f64,
    pub passed: bool,
}

impl CrReport {
    fn from_points(beta: f64, points: Vec<VerifiedPoint>) -> Self {
        let max_error = points.iter().map(|p| p.error).fold(0.0, f64::max);
        Self {
            beta,
            target: randomized_ratio(beta),
            passed: max_error < VERIFY_TOLERANCE,
            points,
            max_error,
        }
    }
}

/// `E_{s ~ f*}[h(A_s, sigma)]`: continuous part by quadrature (split at the
/// kink `s = sigma`) plus the atom's contribution.
pub fn expected_ratio_under_f_star(sigma: f64, beta: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let side = |never: bool| {
        move |s: f64| ratio_branch(s, sigma, beta, never) * f_star_density(s, beta)
    };
    let kink = sigma.clamp(0.0, 1.0);
    let mut value = 0.0;
    if kink > 0.0 {
        value += adaptive_simpson(side(false), 0.0, kink, QUADRATURE_TOLERANCE)?;
    }
    if kink < 1.0 {
        value += adaptive_simpson(side(true), kink, 1.0, QUADRATURE_TOLERANCE)?;
    }
    Ok(value + ratio_h(f64::INFINITY, sigma, beta) * f_star_atom(beta))
}

/// Checks `max_sigma E_{f*}[h] = e / (e - 1 + beta)` pointwise on a grid.
pub fn verify_randomized_cr(beta: f64, sigma_grid: &[f64]) -> Result<CrReport> {
    check_beta(beta)?;
    let target = randomized_ratio(beta);
    let points = sigma_grid
        .iter()
        .map(|&sigma| {
            let value = expected_ratio_under_f_star(sigma, beta)?;
            Ok(VerifiedPoint {
                at: sigma,
                value,
                error: (value - target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrReport::from_points(beta, points))
}

/// `E_{sigma ~ g*}[h(A_s, sigma)]` for a fixed deterministic threshold.
pub fn expected_ratio_under_g_star(s: f64, beta: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(DispatchError::Domain(format!(
            "threshold {s} must be positive and finite"
        )));
    }
    let cut = SIGMA_TRUNCATION.max(s + SIGMA_TRUNCATION);
    let mut breaks = vec![0.0, s.min(1.0), 1.0, s.max(1.0), cut];
    breaks.dedup();
    let mut value = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let never = w[1] <= s;
            let f = |sigma: f64| ratio_branch(s, sigma, beta, never) * g_star_density(sigma, beta);
            value += adaptive_simpson(f, w[0], w[1], QUADRATURE_TOLERANCE)?;
        }
    }
    // Beyond `cut > s`: h = 1 + s (1 - beta) / ((sigma - 1) beta + 1).
    Ok(value + g_star_tail(cut, beta, s * (1.0 - beta)))
}

/// Checks that every deterministic threshold earns exactly
/// `e / (e - 1 + beta)` against `g*`, so no deterministic algorithm beats
/// the bound and, by Yao's principle, neither does any randomized one.
pub fn verify_yao_bound(beta: f64, s_grid: &[f64]) -> Result<CrReport> {
    check_beta(beta)?;
    let target = randomized_ratio(beta);
    let points = s_grid
        .iter()
        .map(|&s| {
            let value = expected_ratio_under_g_star(s, beta)?;
            Ok(VerifiedPoint {
                at: s,
                value,
                error: (value - target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrReport::from_points(beta, points))
}

/// Worst-case binary instance for threshold `s_target`: flat spot price
/// `beta * p_g`, unit demand until the accumulated deficit first reaches
/// `s_target * p_m`, nothing afterwards.
pub fn adversarial_trace(
    s_target: Rational,
    beta: Rational,
    horizon: usize,
    local_price: Rational,
    peak_price: Rational,
) -> Result<(DemandTrace, PriceModel)> {
    if beta < Rational::zero() || beta >= Rational::one() {
        return Err(DispatchError::Domain(format!(
            "beta {beta} must lie in [0, 1) for a positive deficit"
        )));
    }
    if s_target < Rational::zero() {
        return Err(DispatchError::Domain(format!("negative threshold {s_target}")));
    }
    let spot = beta * local_price;
    let prices = PriceModel::flat(horizon, spot, local_price, peak_price)?;
    let per_slot = local_price - spot;
    let demand_slots = (s_target * peak_price / per_slot).ceil().to_integer();
    let demand_slots = usize::try_from(demand_slots)
        .map_err(|_| DispatchError::Domain("threshold too large".into()))?;
    if demand_slots > horizon {
        return Err(DispatchError::Capacity(format!(
            "{demand_slots} demand slots needed, horizon is {horizon}"
        )));
    }
    let mut demand = vec![0; horizon];
    demand[..demand_slots].fill(1);
    Ok((DemandTrace::new(demand)?, prices))
}

/// Problem instance used by the measurement harness.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub trace: DemandTrace,
    pub prices: PriceModel,
    pub generator: GeneratorSpec,
}

/// Ratio of two costs with `0/0 = 1` and `x/0 = inf`.
pub fn cost_ratio(online: &Rational, offline: &Rational) -> f64 {
    if offline.is_zero() {
        if online.is_zero() {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        to_f64(&(*online / *offline))
    }
}

/// Worst observed ratio over `instances`; per instance, the online cost is
/// averaged over `seeds` (pass a single seed for deterministic algorithms).
pub fn empirical_cr<A, O>(
    instances: &[Instance],
    seeds: &[u64],
    mut online: A,
    mut offline: O,
) -> Result<f64>
where
    A: FnMut(&Instance, u64) -> Result<Schedule>,
    O: FnMut(&Instance) -> Result<Schedule>,
{
    if seeds.is_empty() {
        return Err(DispatchError::Config("at least one seed is required".into()));
    }
    let mut worst: f64 = 1.0;
    for inst in instances {
        let off = evaluate_cost(&offline(inst)?, &inst.prices)?.total;
        let mut sum = Rational::zero();
        for &seed in seeds {
            sum += evaluate_cost(&online(inst, seed)?, &inst.prices)?.total;
        }
        let mean = sum / Rational::from_integer(seeds.len() as i128);
        worst = worst.max(cost_ratio(&mean, &off));
    }
    Ok(worst)
}
