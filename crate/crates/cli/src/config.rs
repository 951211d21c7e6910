//! Optimizer configuration: defaults, then the `--config` file, then flags.

use std::fs;
use std::path::Path;

use cone_iso_core::{ConeSpec, OptimizationConfig};
use serde_json::{Map, Value};

use crate::CliError;

fn defaults() -> Map<String, Value> {
    match serde_json::to_value(OptimizationConfig::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("OptimizationConfig serializes to an object"),
    }
}

/// Checks one key against the known fields and their types.
fn check_key(key: &str, value: &Value, base: &Map<String, Value>) -> Result<(), CliError> {
    if !base.contains_key(key) {
        return Err(CliError::usage(format!("unknown config key `{key}`")));
    }
    let mut probe = base.clone();
    probe.insert(key.to_string(), value.clone());
    serde_json::from_value::<OptimizationConfig>(Value::Object(probe))
        .map(|_| ())
        .map_err(|e| CliError::usage(format!("config key `{key}`: {e}")))
}

/// Parses the contents of a config file. Blank files mean "no overrides".
pub fn parse_overrides(text: &str) -> Result<Map<String, Value>, CliError> {
    if text.trim().is_empty() {
        return Ok(Map::new());
    }
    match serde_json::from_str(text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::usage("config file must contain a JSON object")),
        Err(e) => Err(CliError::usage(format!("malformed config JSON: {e}"))),
    }
}

/// Merges `defaults ← file ← flags`; later layers win key by key.
pub fn merge(file: Option<&Map<String, Value>>, flags: &Map<String, Value>) -> Result<OptimizationConfig, CliError> {
    let base = defaults();
    let mut merged = base.clone();
    for layer in file.into_iter().chain(Some(flags)) {
        for (k, v) in layer {
            check_key(k, v, &base)?;
            merged.insert(k.clone(), v.clone());
        }
    }
    let cfg: OptimizationConfig =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::usage(format!("config: {e}")))?;
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, flags: &Map<String, Value>) -> Result<OptimizationConfig, CliError> {
    let file = match path {
        Some(p) => Some(parse_overrides(&read(p, "config")?)?),
        None => None,
    };
    merge(file.as_ref(), flags)
}

pub(crate) fn read(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {what} file {}: {e}", path.display())))
}

/// `--cone` takes inline JSON or a path to a JSON file.
pub fn load_cone(arg: Option<&str>) -> Result<ConeSpec, CliError> {
    let arg = arg.ok_or_else(|| CliError::usage("--cone is required"))?;
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read(Path::new(arg), "cone")?
    };
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid cone JSON: {e}")))
}
