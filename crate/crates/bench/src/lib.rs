//! Experiment harness for `peakdispatch`: trace ingestion, synthetic traces,
//! experiment runs, parameter sweeps and result files.

pub mod config;
pub mod error;
pub mod experiment;
pub mod results;
pub mod sweep;
pub mod synth;
pub mod traces;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, Algorithm, ResultRow};
pub use results::{emit_results, parse_results, OutputFormat, ResultRecord};
pub use sweep::{run_sweep, SweepParameter, SweepReport};
pub use synth::{synth_trace, SynthSpec, SynthTrace};
pub use traces::load_traces;
