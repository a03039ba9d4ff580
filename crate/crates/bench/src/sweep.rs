//! Parameter sweeps over capacity, peak price, ramp time and forecast noise.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Decimal, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::experiment::{build_instance, run_on_instance, Algorithm, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Capacity as a fraction of peak net demand.
    Rho,
    /// Peak tariff, $/kW.
    Peak,
    /// Ramp-up time in slots.
    Gamma,
    /// Forecast error level.
    Noise,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Rho => "rho",
            SweepParameter::Peak => "peak",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Noise => "noise",
        }
    }
}

impl FromStr for SweepParameter {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(SweepParameter::Rho),
            "peak" => Ok(SweepParameter::Peak),
            "gamma" => Ok(SweepParameter::Gamma),
            "noise" => Ok(SweepParameter::Noise),
            other => Err(BenchError::Config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
    /// Whether BED's saving rises and then falls again with capacity; only
    /// computed for capacity sweeps.
    pub bed_non_monotone: Option<bool>,
}

impl SweepReport {
    /// Per-point reduction of one algorithm, if present everywhere.
    pub fn reductions(&self, algorithm: Algorithm) -> Option<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                p.rows
                    .iter()
                    .find(|r| r.algorithm == algorithm)
                    .map(|r| r.reduction)
            })
            .collect()
    }
}

/// Replaces the list swept for `parameter` with comma-separated `values`.
pub fn override_values(
    config: &mut ExperimentConfig,
    parameter: SweepParameter,
    values: &str,
) -> Result<()> {
    let items: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let bad = |s: &str| BenchError::Config(format!("bad sweep value {s:?}"));
    match parameter {
        SweepParameter::Rho => {
            config.sweep.rho = items
                .iter()
                .map(|s| s.parse().map_err(|_| bad(s)))
                .collect::<Result<_>>()?
        }
        SweepParameter::Noise => {
            config.sweep.noise = items
                .iter()
                .map(|s| s.parse().map_err(|_| bad(s)))
                .collect::<Result<_>>()?
        }
        SweepParameter::Gamma => {
            config.sweep.gamma = items
                .iter()
                .map(|s| s.parse().map_err(|_| bad(s)))
                .collect::<Result<_>>()?
        }
        SweepParameter::Peak => {
            config.sweep.peak = items.iter().map(|s| Decimal::new(s)).collect::<Result<_>>()?
        }
    }
    config.validate()
}

fn points(config: &ExperimentConfig, parameter: SweepParameter) -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    match parameter {
        SweepParameter::Rho => {
            for &rho in &config.sweep.rho {
                let mut c = config.clone();
                c.generator.capacity = None;
                c.generator.rho = Some(rho);
                out.push((format!("{rho}"), c));
            }
        }
        SweepParameter::Peak => {
            for &peak in &config.sweep.peak {
                let mut c = config.clone();
                c.prices.peak = peak;
                out.push((peak.0.to_string(), c));
            }
        }
        SweepParameter::Gamma => {
            for &gamma in &config.sweep.gamma {
                let mut c = config.clone();
                c.generator.ramp = None;
                c.generator.gamma = Some(gamma);
                c.generator.lookahead = None;
                out.push((gamma.to_string(), c));
            }
        }
        SweepParameter::Noise => {
            for &noise in &config.sweep.noise {
                let mut c = config.clone();
                c.run.noise = noise;
                out.push((format!("{noise}"), c));
            }
        }
    }
    out
}

/// Runs one experiment per value of `parameter`. A capacity sweep fails if
/// the offline optimum ever gets more expensive as capacity grows; a dip in
/// BED's saving is reported, not rejected.
pub fn run_sweep(config: &ExperimentConfig, parameter: SweepParameter) -> Result<SweepReport> {
    config.validate()?;
    let plan = points(config, parameter);
    if plan.is_empty() {
        return Err(BenchError::Config(format!(
            "no values to sweep for {}",
            parameter.name()
        )));
    }
    let mut pts = Vec::with_capacity(plan.len());
    for (label, c) in plan {
        log::info!("{} = {label}", parameter.name());
        let instance = build_instance(&c)?;
        let mut run = c.run.clone();
        if parameter == SweepParameter::Gamma && run.algorithms.is_none() {
            // Keep the row set identical across the sweep.
            run.algorithms = Some(vec![
                Algorithm::Benchmark,
                Algorithm::PeakOblivious,
                Algorithm::NrbfBed,
                Algorithm::NrbfRed,
                Algorithm::Offline,
            ]);
        }
        pts.push(SweepPoint {
            label,
            rows: run_on_instance(&instance, &run)?,
        });
    }
    let mut report = SweepReport {
        parameter,
        points: pts,
        bed_non_monotone: None,
    };
    if parameter == SweepParameter::Rho {
        check_capacity_sweep(config, &mut report)?;
    }
    Ok(report)
}

fn check_capacity_sweep(config: &ExperimentConfig, report: &mut SweepReport) -> Result<()> {
    let mut order: Vec<usize> = (0..report.points.len()).collect();
    order.sort_by(|&a, &b| config.sweep.rho[a].total_cmp(&config.sweep.rho[b]));
    let totals: Option<Vec<_>> = order
        .iter()
        .map(|&i| {
            report.points[i]
                .rows
                .iter()
                .find(|r| r.algorithm == Algorithm::Offline)
                .map(|r| r.cost.total)
        })
        .collect();
    if let Some(totals) = totals {
        if let Some(w) = totals.windows(2).position(|w| w[1] > w[0]) {
            return Err(BenchError::Validation(format!(
                "offline cost rises between rho = {} and rho = {}",
                config.sweep.rho[order[w]],
                config.sweep.rho[order[w + 1]]
            )));
        }
    }
    if let Some(red) = report.reductions(Algorithm::Bed) {
        let sorted: Vec<f64> = order.iter().map(|&i| red[i]).collect();
        let dips = sorted.windows(2).any(|w| w[1] < w[0]);
        if dips {
            log::warn!("BED saving is not monotone in capacity: {sorted:?}");
        }
        report.bed_non_monotone = Some(dips);
    }
    Ok(())
}
