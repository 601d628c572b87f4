//! Configuration assembly: defaults, then the JSON config document, then
//! command-line flags, with every key validated against the experiment's
//! parameter schema before anything runs.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value;

#[derive(Debug)]
pub enum ConfigError {
    UnknownParameter { experiment: String, name: String },
    WrongType { name: String, expected: &'static str },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownParameter { experiment, name } => {
                write!(f, "unknown parameter '{name}' for experiment '{experiment}'")
            }
            ConfigError::WrongType { name, expected } => {
                write!(f, "parameter '{name}' must be a {expected}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Typed view over the merged (config-file + CLI) parameter map.
#[derive(Debug)]
pub struct ParamSet {
    experiment: String,
    values: BTreeMap<String, Value>,
    allowed: Vec<&'static str>,
}

/// Keys handled by the harness itself rather than an experiment.
pub const GLOBAL_KEYS: [&str; 6] = ["experiment", "seed", "trials", "out", "format", "threads"];

impl ParamSet {
    pub fn new(
        experiment: &str,
        config: &serde_json::Map<String, Value>,
        allowed: &[&'static str],
    ) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (k, v) in config {
            if GLOBAL_KEYS.contains(&k.as_str()) {
                continue;
            }
            if !allowed.contains(&k.as_str()) {
                return Err(ConfigError::UnknownParameter {
                    experiment: experiment.to_string(),
                    name: k.clone(),
                });
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Self {
            experiment: experiment.to_string(),
            values,
            allowed: allowed.to_vec(),
        })
    }

    /// CLI flags override config values.
    pub fn override_f64(&mut self, name: &'static str, v: Option<f64>) {
        debug_assert!(self.allowed.contains(&name), "{name} not in schema");
        if let Some(v) = v {
            self.values.insert(name.into(), serde_json::json!(v));
        }
    }

    pub fn override_usize(&mut self, name: &'static str, v: Option<usize>) {
        debug_assert!(self.allowed.contains(&name), "{name} not in schema");
        if let Some(v) = v {
            self.values.insert(name.into(), serde_json::json!(v));
        }
    }

    pub fn override_string(&mut self, name: &'static str, v: Option<&str>) {
        debug_assert!(self.allowed.contains(&name), "{name} not in schema");
        if let Some(v) = v {
            self.values.insert(name.into(), Value::String(v.to_string()));
        }
    }

    pub fn f64(&self, name: &str, default: f64) -> Result<f64, ConfigError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(Value::Number(n)) => n.as_f64().ok_or(ConfigError::WrongType {
                name: name.into(),
                expected: "number",
            }),
            Some(_) => Err(ConfigError::WrongType { name: name.into(), expected: "number" }),
        }
    }

    pub fn usize(&self, name: &str, default: usize) -> Result<usize, ConfigError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(|v| v as usize)
                .ok_or(ConfigError::WrongType {
                    name: name.into(),
                    expected: "non-negative integer",
                }),
            Some(_) => Err(ConfigError::WrongType {
                name: name.into(),
                expected: "non-negative integer",
            }),
        }
    }

    pub fn string(&self, name: &str, default: &str) -> Result<String, ConfigError> {
        match self.values.get(name) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(ConfigError::WrongType { name: name.into(), expected: "string" }),
        }
    }

    pub fn opt_string(&self, name: &str) -> Result<Option<String>, ConfigError> {
        match self.values.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(ConfigError::WrongType { name: name.into(), expected: "string" }),
        }
    }

    pub fn experiment(&self) -> &str {
        &self.experiment
    }

    /// Echo of every effective parameter for the report.
    pub fn echo(&self) -> BTreeMap<String, Value> {
        self.values.clone()
    }
}
