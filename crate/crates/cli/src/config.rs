//! Settings resolution: command-line flags, then a flat `key = value` config
//! file, then the environment, then built-in defaults.

use ergodelab::lab::DEFAULT_TOL;
use std::collections::BTreeMap;
use std::fmt;

/// Environment variable overriding the default tolerance.
pub const TOL_ENV: &str = "ERGODELAB_TOL";

/// A problem with the invocation itself; reported with exit code 64.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<ergodelab::Error> for UsageError {
    fn from(e: ergodelab::Error) -> Self {
        UsageError(e.to_string())
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "g",
    "f",
    "q",
    "model",
    "element",
    "eps",
    "alpha",
    "phi",
    "criterion",
    "tol",
    "out",
    "format",
    "t-grid",
    "upper-limits",
    "deltas",
    "z-min",
    "z-max",
    "points",
];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped,
/// keys may use `-` or `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| UsageError(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(UsageError(format!("config line {}: unknown key `{key}`", n + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Flag values layered over the config file and the environment.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    flags: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
    env_tol: Option<String>,
}

impl Settings {
    pub fn new(flags: BTreeMap<String, String>, file: BTreeMap<String, String>, env_tol: Option<String>) -> Self {
        Settings { flags, file, env_tol }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags.get(key).or_else(|| self.file.get(key)).map(String::as_str).or_else(|| {
            if key == "tol" {
                self.env_tol.as_deref()
            } else {
                None
            }
        })
    }

    pub fn require(&self, key: &str) -> Result<&str, UsageError> {
        self.get(key).ok_or_else(|| UsageError(format!("missing required option --{key}")))
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, UsageError> {
        self.get(key)
            .map(|v| v.trim().parse::<f64>().map_err(|_| UsageError(format!("--{key}: `{v}` is not a number"))))
            .transpose()
    }

    pub fn tol(&self) -> Result<f64, UsageError> {
        let tol = self.number("tol")?.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(UsageError(format!("tolerance {tol} must be > 0")));
        }
        Ok(tol)
    }

    /// A comma-separated list of numbers, or `default` when absent.
    pub fn list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, UsageError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| UsageError(format!("--{key}: `{p}` is not a number"))))
                .collect(),
        }
    }
}
