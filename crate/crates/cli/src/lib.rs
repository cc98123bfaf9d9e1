//! Command-line driver for dynamic robust risk experiments.
//!
//! Experiments are JSON documents (see [`doc`]) describing a scenario
//! tree, processes, a risk family and an uncertainty set. The commands in
//! [`run`] evaluate robust values, run the property and time-consistency
//! checks, build the recursive construction, audit the implication lattice,
//! reproduce the uncertainty-set property table and compare solvers with
//! brute-force oracles. Each produces a [`Report`] that renders as JSON or
//! as aligned text.

pub mod doc;
pub mod report;
pub mod run;

pub use doc::{
    build_experiment, parse_experiment, serialize_experiment, Experiment, ExperimentDoc,
    ParseError, SCHEMA_VERSION,
};
pub use report::{Outcome, Report, Table};
pub use run::{run_command, run_document, CliError, Command, Overrides};

/// Reads and parses an experiment file.
pub fn load_experiment(path: &std::path::Path) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_experiment(&text)?)
}
