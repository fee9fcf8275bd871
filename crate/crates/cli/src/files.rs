//! Input file readers.

use crate::Failure;
use serde::de::DeserializeOwned;
use std::path::Path;
use topp_mpc::sim::Scenario;

/// Parse a JSON file; syntax and schema errors carry line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// A scenario file, validated.
pub fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let sc: Scenario = read_json(path)?;
    sc.validate()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(sc)
}
