use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::{Duration, NaiveDateTime};
use clap::{Parser, Subcommand};
use peakdispatch::Rational;
use peakdispatch_bench::config::ExperimentConfig;
use peakdispatch_bench::results::{render_results, render_sweep_csv};
use peakdispatch_bench::sweep::override_values;
use peakdispatch_bench::synth::{synth_trace, SynthSpec};
use peakdispatch_bench::traces::write_series;
use peakdispatch_bench::verify::run_verification;
use peakdispatch_bench::{run_experiment, run_sweep, OutputFormat, SweepParameter};

#[derive(Parser)]
#[command(name = "peakdispatch", version, about = "Peak-aware microgrid dispatch experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm on one billing cycle.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Result file; overrides the config. Standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// csv or json; overrides the config.
        #[arg(short, long)]
        format: Option<OutputFormat>,
    },
    /// Check the competitive-ratio formulas and the offline oracles.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic demand/wind pair as `timestamp,value` CSV files.
    Synth {
        #[arg(long, default_value_t = 2880)]
        slots: usize,
        /// Mean demand, kWh per slot.
        #[arg(long, default_value_t = 900.0)]
        base: f64,
        /// Daily swing, kWh per slot.
        #[arg(long, default_value_t = 400.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        wind_fraction: f64,
        #[arg(long, default_value_t = 15)]
        slot_minutes: u32,
        /// ISO-8601 start; integer slot indices when absent.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Sweep one parameter and write a plot-ready CSV table.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// rho, peak, gamma or noise.
        #[arg(short, long)]
        param: SweepParameter,
        /// Comma-separated values; the config's list when absent.
        #[arg(long)]
        values: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn write_or_print(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            output,
            format,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rows = run_experiment(&cfg)?;
            let format = format.unwrap_or(cfg.output.format);
            let path = output.or(cfg.output.path.clone());
            write_or_print(&render_results(&rows, format), path.as_ref())?;
            Ok(true)
        }
        Command::Verify {
            instances,
            seed,
            json,
        } => {
            let report = run_verification(instances, seed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for c in &report.checks {
                    let mark = if c.passed { "PASS" } else { "FAIL" };
                    println!("{mark}  {}  ({})", c.name, c.detail);
                }
            }
            Ok(report.passed())
        }
        Command::Synth {
            slots,
            base,
            amplitude,
            seed,
            wind_fraction,
            slot_minutes,
            start,
            out_dir,
        } => {
            if slot_minutes == 0 || 1440 % slot_minutes != 0 {
                anyhow::bail!("slot_minutes {slot_minutes} must divide a day");
            }
            let mut spec = SynthSpec::new(slots, base, amplitude, seed, wind_fraction);
            spec.slots_per_day = (1440 / slot_minutes) as usize;
            let trace = synth_trace(&spec, Rational::from_integer(1))?;
            let stamps: Vec<String> = match start {
                Some(s) => {
                    let t0 = NaiveDateTime::parse_from_str(&s, "%Y-%m-%dT%H:%M:%S")
                        .or_else(|_| NaiveDateTime::parse_from_str(&s, "%Y-%m-%dT%H:%M"))
                        .with_context(|| format!("bad start timestamp {s:?}"))?;
                    (0..slots)
                        .map(|i| {
                            (t0 + Duration::minutes(i as i64 * slot_minutes as i64))
                                .format("%Y-%m-%dT%H:%M:%S")
                                .to_string()
                        })
                        .collect()
                }
                None => (0..slots).map(|i| i.to_string()).collect(),
            };
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            write_series(&out_dir.join("demand.csv"), &stamps, &trace.demand_kwh)?;
            write_series(&out_dir.join("wind.csv"), &stamps, &trace.renewable_kwh)?;
            log::info!("wrote {slots} slots to {}", out_dir.display());
            Ok(true)
        }
        Command::Sweep {
            config,
            param,
            values,
            output,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(v) = values {
                override_values(&mut cfg, param, &v)?;
            }
            let report = run_sweep(&cfg, param)?;
            if report.bed_non_monotone == Some(true) {
                eprintln!("note: BED saving is not monotone in rho");
            }
            write_or_print(&render_sweep_csv(&report), output.as_ref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
