//! Config-file support: a flat JSON object whose keys mirror the long
//! flags of the invoked subcommand. Command-line values always win; keys
//! that the subcommand does not recognize are an error.

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use std::error::Error;
use std::fs;
use std::path::Path;

pub type CliResult<T> = Result<T, Box<dyn Error>>;

pub struct ConfigMap(Map<String, Value>);

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self(Map::new()));
        };
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| format!("config {} is not valid JSON: {e}", path.display()))?;
        match value {
            Value::Object(map) => Ok(Self(map)),
            _ => Err(format!("config {} must be a JSON object", path.display()).into()),
        }
    }

    /// Remove and decode a key, so leftovers can be flagged in [`finish`].
    pub fn take<T: DeserializeOwned>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v)
                .map(Some)
                .map_err(|e| format!("config key `{key}`: {e}").into()),
        }
    }

    /// Error on keys the subcommand did not consume.
    pub fn finish(self) -> CliResult<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.0.keys().map(String::as_str).collect();
            Err(format!("unknown config keys: {}", keys.join(", ")).into())
        }
    }
}
