//! Config-file merging: flag > file > default.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::path::Path;

use crate::error::CliError;

/// Parses a TOML config and returns the table for `command`, if any.
pub fn load_section(path: &Path, command: &str) -> Result<Option<toml::Table>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    match table.remove(command) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(CliError::Usage(format!(
            "[{command}] in {} must be a table",
            path.display()
        ))),
    }
}

fn is_unset(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// Fills every option left unset on the command line from `file`. Unknown
/// keys in the file are rejected.
pub fn merge<T>(flags: &T, file: Option<toml::Table>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(file) = file else {
        return Ok(serde_json::from_value(serde_json::to_value(flags)?)?);
    };
    let known = serde_json::to_value(T::default())?;
    let Value::Object(known) = known else {
        unreachable!("argument structs serialize to objects")
    };
    let Value::Object(mut merged) = serde_json::to_value(flags)? else {
        unreachable!("argument structs serialize to objects")
    };
    for (key, value) in file {
        if !known.contains_key(&key) {
            return Err(CliError::Usage(format!("unknown config key '{key}'")));
        }
        if merged.get(&key).is_none_or(is_unset) {
            merged.insert(key, serde_json::to_value(value)?);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config file: {e}")))
}
