//! TOML config files with one section per command.
//!
//! ```toml
//! seed = 7
//! output = "csv"
//!
//! [single]
//! mu = 0.004
//! sigma = 0.10
//! ```
//!
//! Keys in a section use the long flag names with `-` replaced by `_`.
//! Unknown keys and sections are rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{EstimateArgs, FrontierArgs, ParityArgs, ScenarioArgs, SimulateArgs, SingleArgs, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::report::OutputFormat;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub output: Option<OutputFormat>,
    pub single: Option<SingleArgs>,
    pub sweep: Option<SweepArgs>,
    pub parity: Option<ParityArgs>,
    pub simulate: Option<SimulateArgs>,
    pub scenario: Option<ScenarioArgs>,
    pub frontier: Option<FrontierArgs>,
    pub estimate: Option<EstimateArgs>,
}

pub fn load(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> CliResult<ConfigFile> {
    toml::from_str(text).map_err(|e| CliError::invalid(e.message().to_string()))
}

/// Overlays the flags that were given on top of the config section.
pub fn merge<T>(section: Option<T>, flags: T) -> CliResult<T>
where
    T: Serialize + DeserializeOwned,
{
    let Some(section) = section else {
        return Ok(flags);
    };
    let to_value = |x: &T| serde_json::to_value(x).map_err(|e| CliError::invalid(e.to_string()));
    let mut base = to_value(&section)?;
    if let (Value::Object(base), Value::Object(over)) = (&mut base, to_value(&flags)?) {
        for (k, v) in over {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::invalid(e.to_string()))
}
