use himap::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub himap: String,
    #[serde(rename = "himap-cli")]
    pub cli: String,
}

pub fn versions() -> Versions {
    Versions {
        himap: himap::VERSION.to_string(),
        cli: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Common envelope for every machine-readable report: the command, an echo
/// of the effective configuration, the seed when one exists, tool versions,
/// and per-phase wall-clock timings of the core calls.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub versions: Versions,
    pub timings_s: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub payload: Value,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed: None,
            versions: versions(),
            timings_s: BTreeMap::new(),
            payload: Value::Object(Default::default()),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn timing(mut self, phase: &str, seconds: f64) -> Self {
        self.timings_s.insert(phase.to_string(), seconds);
        self
    }

    pub fn field(mut self, key: &str, value: Value) -> Self {
        if let Value::Object(map) = &mut self.payload {
            map.insert(key.to_string(), value);
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Prints the report on stdout and optionally writes it to a file.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let text = self.to_json();
        if let Some(path) = out {
            std::fs::write(path, &text)?;
        }
        print!("{text}");
        Ok(())
    }
}

/// Runs `f` under a monotonic clock; the caller decides which phase the
/// duration belongs to. Core calls only: file I/O stays outside.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

pub fn json_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("value serializes")
}

/// Loads a JSON config file into `C`, or the default when no path is given.
/// Schema violations are usage errors, not data errors.
pub fn load_config<C: for<'a> Deserialize<'a> + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad config {}: {e}", p.display())))
        }
    }
}
