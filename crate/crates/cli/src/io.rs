use std::fs;
use std::io::{self, Write};
use std::path::Path;

use markov_noise::noise::FunctionSpec;
use markov_noise::spec::ChainSpec;
use markov_noise::Chain;
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new("Io", e.to_string()).with("path", path))
}

pub fn load_chain(path: &Path) -> CliResult<Chain> {
    let spec = ChainSpec::from_json(&read(path)?).map_err(|e| CliError::from(e).with("path", path))?;
    spec.build().map_err(|e| CliError::from(e).with("path", path))
}

pub fn load_function(path: &Path) -> CliResult<FunctionSpec> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::new("BadSpec", e.to_string()).with("path", path))
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::from(e).with("path", p))?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Header plus rows of already formatted cells.
pub fn write_csv(header: &[String], rows: &[Vec<String>], out: Option<&Path>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip formatting.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
