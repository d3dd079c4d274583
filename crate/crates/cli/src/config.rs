//! Experiment configuration: one JSON document per experiment.
//!
//! ```json
//! {
//!   "model": "demo_eq3",
//!   "seed": 7,
//!   "protocol": { "kind": "contexts", "counts": 100000 },
//!   "replicate": { "protocol": "contexts", "n_per_context": 1000, "replications": 10000 },
//!   "windows": [0.1, 0.5, 1.0]
//! }
//! ```
//!
//! `model` is a shipped demo name, a path to a recipe or model file relative
//! to the config file, or an inline recipe or model object.

use std::fs;
use std::path::{Path, PathBuf};

use bellsim_core::model_file::{load_model, model_from_value};
use bellsim_core::models::demo_model;
use bellsim_core::{Error, Model, ReplicationProtocol, Schedule};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Value,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate: Option<ReplicateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    Same(u64),
    PerContext([u64; 4]),
}

impl Counts {
    pub fn expand(&self) -> [u64; 4] {
        match *self {
            Counts::Same(n) => [n; 4],
            Counts::PerContext(c) => c,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    Contexts {
        counts: Counts,
    },
    Spreadsheet {
        rows: u64,
    },
    TimeSeries {
        emissions: u64,
        spacing: f64,
        schedule: Schedule,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateConfig {
    pub protocol: ReplicationProtocol,
    pub n_per_context: u64,
    pub replications: u64,
}

/// A parsed config and the directory its relative paths resolve against.
pub struct Loaded {
    pub config: Config,
    pub base: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." { "config".to_string() } else { at };
        Error::invalid(at, e.into_inner().to_string())
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl Loaded {
    pub fn model(&self) -> Result<Model, Error> {
        match &self.config.model {
            Value::String(s) if s.ends_with(".json") => load_model(&self.base.join(s)),
            Value::String(s) => demo_model(s),
            v => model_from_value(v).map_err(|e| prefix("model", e)),
        }
    }

    pub fn protocol(&self) -> Result<&ProtocolConfig, Error> {
        self.config
            .protocol
            .as_ref()
            .ok_or_else(|| Error::invalid("protocol", "missing field `protocol`"))
    }

    pub fn replicate(&self) -> Result<&ReplicateConfig, Error> {
        self.config
            .replicate
            .as_ref()
            .ok_or_else(|| Error::invalid("replicate", "missing field `replicate`"))
    }

    pub fn windows(&self) -> Result<&[f64], Error> {
        match &self.config.windows {
            Some(w) if !w.is_empty() => Ok(w),
            Some(_) => Err(Error::invalid("windows", "window list is empty")),
            None => Err(Error::invalid("windows", "missing field `windows`")),
        }
    }
}

fn prefix(root: &str, e: Error) -> Error {
    match e {
        Error::Invalid { path, message } if path.is_empty() => Error::invalid(root, message),
        Error::Invalid { path, message } => Error::invalid(format!("{root}.{path}"), message),
        other => other,
    }
}
