//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use num_traits::Zero;
use peakdispatch::rational::{from_f64, parse_decimal};
use peakdispatch::{GeneratorSpec, GeneratorStart, Rational};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BenchError, Result};
use crate::experiment::Algorithm;
use crate::results::OutputFormat;
use crate::synth::SynthSpec;

/// Exact decimal read from a TOML string, integer or float.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Decimal(pub Rational);

impl Decimal {
    pub fn new(text: &str) -> Result<Self> {
        Ok(Decimal(parse_decimal(text)?))
    }
}

impl From<Rational> for Decimal {
    fn from(r: Rational) -> Self {
        Decimal(r)
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal number or a string such as \"0.17\" or \"1/3\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Decimal, E> {
                parse_decimal(v).map(Decimal).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(Rational::from_integer(v as i128)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(Rational::from_integer(v as i128)))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Decimal, E> {
                from_f64(v).map(Decimal).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Where the demand, renewable and price series come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    Files {
        demand: PathBuf,
        #[serde(default)]
        renewable: Option<PathBuf>,
        #[serde(default)]
        prices: Option<PathBuf>,
    },
    Synthetic(SynthSpec),
}

/// Piecewise-constant time-of-use band, hours `[from_hour, to_hour)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouBand {
    pub from_hour: u32,
    pub to_hour: u32,
    pub price: Decimal,
}

/// Tariff in $/kWh and $/kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    /// Local generation price `p_g`, $/kWh.
    pub local: Decimal,
    /// Peak tariff, $/kW per billing cycle.
    pub peak: Decimal,
    #[serde(default = "default_slot_minutes")]
    pub slot_minutes: u32,
    /// Flat spot price, $/kWh.
    #[serde(default)]
    pub spot: Option<Decimal>,
    #[serde(default)]
    pub tou: Vec<TouBand>,
    /// Declared lower bound on the spot price; the minimum of the series
    /// when absent.
    #[serde(default)]
    pub floor: Option<Decimal>,
}

fn default_slot_minutes() -> u32 {
    15
}

impl PriceConfig {
    pub fn slot_hours(&self) -> Rational {
        Rational::new(self.slot_minutes as i128, 60)
    }

    /// Spot price ($/kWh) for a slot starting `minute_of_day` minutes after
    /// midnight.
    pub fn spot_at_minute(&self, minute_of_day: u32) -> Result<Rational> {
        let hour = (minute_of_day / 60) % 24;
        for band in &self.tou {
            let inside = if band.from_hour <= band.to_hour {
                (band.from_hour..band.to_hour).contains(&hour)
            } else {
                hour >= band.from_hour || hour < band.to_hour
            };
            if inside {
                return Ok(band.price.0);
            }
        }
        self.spot.map(|d| d.0).ok_or_else(|| {
            BenchError::Config(format!("no spot price covers hour {hour}"))
        })
    }
}

/// Initial generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartConfig {
    Free,
    Cold,
    Level(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Capacity in demand units; overrides `rho`.
    #[serde(default)]
    pub capacity: Option<u64>,
    /// Capacity as a fraction of peak net demand.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Ramp limit in demand units per slot; overrides `gamma`.
    #[serde(default)]
    pub ramp: Option<u64>,
    /// Slots from zero to full output; `R = ceil(C / gamma)`.
    #[serde(default)]
    pub gamma: Option<u64>,
    #[serde(default)]
    pub lookahead: Option<usize>,
    #[serde(default = "default_start")]
    pub start: StartConfig,
}

fn default_start() -> StartConfig {
    StartConfig::Cold
}

impl GeneratorConfig {
    /// Concrete generator for a trace with peak net demand `peak`.
    pub fn resolve(&self, peak: u64) -> Result<GeneratorSpec> {
        let capacity = match (self.capacity, self.rho) {
            (Some(c), _) => c,
            (None, Some(rho)) => (rho * peak as f64).round() as u64,
            (None, None) => {
                return Err(BenchError::Config(
                    "generator needs `capacity` or `rho`".into(),
                ))
            }
        };
        let ramp = match (self.ramp, self.gamma) {
            (Some(r), _) => r,
            (None, Some(g)) => capacity.div_ceil(g),
            (None, None) => capacity,
        }
        .max(1);
        let mut spec = GeneratorSpec::new(capacity, ramp)?;
        if let Some(l) = self.lookahead {
            spec = spec.with_lookahead(l);
        }
        let start = match self.start {
            StartConfig::Free => GeneratorStart::Free,
            StartConfig::Cold => GeneratorStart::At(0),
            StartConfig::Level(x) if x <= capacity => GeneratorStart::At(x),
            StartConfig::Level(x) => {
                return Err(BenchError::Config(format!(
                    "start level {x} exceeds capacity {capacity}"
                )))
            }
        };
        Ok(spec.with_start(start))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Rows to produce; the default set depends on the generator.
    #[serde(default)]
    pub algorithms: Option<Vec<Algorithm>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Randomized trials averaged per row.
    #[serde(default = "default_trials")]
    pub red_trials: usize,
    /// Std of lookahead forecast errors as a fraction of true demand.
    #[serde(default)]
    pub noise: f64,
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    20
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithms: None,
            seed: default_seed(),
            red_trials: default_trials(),
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,
    /// Peak tariffs, $/kW.
    #[serde(default)]
    pub peak: Vec<Decimal>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<u64>,
    #[serde(default = "default_noise")]
    pub noise: Vec<f64>,
}

fn default_rho() -> Vec<f64> {
    vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
}

fn default_gamma() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_noise() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.2, 0.3]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rho: default_rho(),
            peak: Vec::new(),
            gamma: default_gamma(),
            noise: default_noise(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub trace: TraceSource,
    /// kWh per demand unit.
    #[serde(default = "default_quantum")]
    pub quantum: Decimal,
    pub prices: PriceConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_quantum() -> Decimal {
    Decimal(Rational::from_integer(100))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| BenchError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            config.rebase(dir);
        }
        Ok(config)
    }

    fn rebase(&mut self, dir: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let TraceSource::Files {
            demand,
            renewable,
            prices,
        } = &mut self.trace
        {
            join(demand);
            renewable.iter_mut().for_each(join);
            prices.iter_mut().for_each(join);
        }
        self.output.path.iter_mut().for_each(join);
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.quantum.0 <= Rational::zero() {
            return fail(format!("quantum must be positive, got {}", self.quantum.0));
        }
        if self.prices.local.0 <= Rational::zero() {
            return fail("local price must be positive".into());
        }
        if self.prices.peak.0 < Rational::zero() {
            return fail("peak price must be nonnegative".into());
        }
        if self.prices.slot_minutes == 0 || 1440 % self.prices.slot_minutes != 0 {
            return fail(format!(
                "slot_minutes {} must divide a day",
                self.prices.slot_minutes
            ));
        }
        for band in &self.prices.tou {
            if band.from_hour > 24 || band.to_hour > 24 {
                return fail(format!(
                    "time-of-use band {}..{} outside 0..24",
                    band.from_hour, band.to_hour
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.run.noise) {
            return fail(format!("noise {} outside [0, 1]", self.run.noise));
        }
        if self.run.red_trials == 0 {
            return fail("red_trials must be at least 1".into());
        }
        if let Some(rho) = self.generator.rho {
            check_rho(rho)?;
        }
        if self.generator.gamma == Some(0) || self.generator.ramp == Some(0) {
            return fail("ramp and gamma must be positive".into());
        }
        for &rho in &self.sweep.rho {
            check_rho(rho)?;
        }
        if self.sweep.gamma.contains(&0) {
            return fail("gamma values must be positive".into());
        }
        if let Some(n) = self.sweep.noise.iter().find(|n| !(0.0..=1.0).contains(*n)) {
            return fail(format!("noise {n} outside [0, 1]"));
        }
        if let Some(algos) = &self.run.algorithms {
            if algos.is_empty() {
                return fail("algorithm list is empty".into());
            }
        }
        if let TraceSource::Synthetic(spec) = &self.trace {
            spec.validate()?;
        }
        Ok(())
    }

    /// Peak price per demand unit: `quantum * p~_m / delta`.
    pub fn peak_per_unit(&self) -> Result<Rational> {
        let per_kwh =
            peakdispatch::convert_peak_price(self.prices.peak.0, self.prices.slot_hours())?;
        Ok(per_kwh * self.quantum.0)
    }

    /// Converts a $/kWh price into $ per demand unit.
    pub fn per_unit(&self, per_kwh: Rational) -> Rational {
        per_kwh * self.quantum.0
    }

    pub fn slot_hours(&self) -> Rational {
        self.prices.slot_hours()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(BenchError::Config(format!("rho {rho} outside (0, 1]")))
    }
}
