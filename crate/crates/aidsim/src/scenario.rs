//! Scenario files.
//!
//! A scenario is a TOML document with the sections `network`, `demand`,
//! `signals`, `fleet`, `confusion` and `run`. Only `network.kind` is
//! required; every other key falls back to the built-in default for that
//! network kind. Unknown keys are rejected with their full path. An
//! optional `[experiment]` table holds default sweeps:
//!
//! ```toml
//! [network]
//! kind = "rcut"
//!
//! [experiment]
//! sweep = ["confusion=0,5,10,15,20"]
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use aidsim_core::{NetworkKind, ScenarioConfig};
use toml::{Table, Value};

const BUNDLED: &[(&str, &str)] = &[
    ("base-cdi", include_str!("../configs/base-cdi.toml")),
    ("base-ddi", include_str!("../configs/base-ddi.toml")),
    ("cav-cdi", include_str!("../configs/cav-cdi.toml")),
    ("cav-ddi", include_str!("../configs/cav-ddi.toml")),
    ("rcut-confusion", include_str!("../configs/rcut-confusion.toml")),
];

const ALIASES: &[(&str, &str)] = &[
    ("cdi", "base-cdi"),
    ("ddi", "base-ddi"),
    ("rcut", "rcut-confusion"),
    ("cdi-cav", "cav-cdi"),
    ("ddi-cav", "cav-ddi"),
];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Key { path: String, message: String },
    #[error("unknown scenario {name:?} (bundled: {})", bundled_names().join(", "))]
    Unknown { name: String },
    #[error("bad sweep {spec:?}: {message}")]
    Sweep { spec: String, message: String },
    #[error(transparent)]
    Invalid(#[from] aidsim_core::Error),
}

fn key_error(path: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Key {
        path: path.into(),
        message: message.into(),
    }
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Source text of a bundled scenario. Underscores and hyphens are
/// interchangeable and a few aliases are accepted.
pub fn bundled_source(name: &str) -> Option<(&'static str, &'static str)> {
    let norm = name.trim().to_ascii_lowercase().replace('_', "-");
    let norm = ALIASES.iter().find(|(a, _)| *a == norm).map_or(norm.as_str(), |(_, b)| *b);
    BUNDLED.iter().find(|(n, _)| *n == norm).copied()
}

/// A parsed scenario: defaults with the file's keys laid over them.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    table: Table,
    pub sweeps: Vec<Sweep>,
}

impl Scenario {
    pub fn bundled(name: &str) -> Result<Self, ScenarioError> {
        let (name, text) = bundled_source(name).ok_or_else(|| ScenarioError::Unknown { name: name.into() })?;
        Self::parse(name, text)
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        Self::parse(&name, &text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self, ScenarioError> {
        let mut user: Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::Syntax(e.to_string()))?;
        let sweeps = match user.remove("experiment") {
            None => Vec::new(),
            Some(Value::Table(t)) => parse_experiment(t)?,
            Some(_) => return Err(key_error("experiment", "must be a table")),
        };
        let kind = network_kind(&user)?;
        let Value::Table(mut table) =
            Value::try_from(ScenarioConfig::baseline(kind)).expect("default config serializes")
        else {
            unreachable!("a struct serializes to a table")
        };
        merge(&mut table, user);
        let s = Scenario {
            name: name.into(),
            table,
            sweeps,
        };
        s.config()?;
        Ok(s)
    }

    /// Sets one dotted key, e.g. `fleet.mpr`.
    pub fn set(&mut self, path: &str, value: Value) -> Result<(), ScenarioError> {
        set_path(&mut self.table, path, value)?;
        self.config().map(|_| ())
    }

    /// Sets a key from `key=value` text; the value is read as a TOML value
    /// and taken as a bare string when that fails.
    pub fn set_str(&mut self, assignment: &str) -> Result<(), ScenarioError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| key_error(assignment, "expected key=value"))?;
        self.set(k.trim(), parse_value(v.trim()))
    }

    /// Validated configuration of the base scenario.
    pub fn config(&self) -> Result<ScenarioConfig, ScenarioError> {
        self.config_with(&[])
    }

    /// Validated configuration with sweep overrides applied.
    pub fn config_with(&self, overrides: &[(String, Value)]) -> Result<ScenarioConfig, ScenarioError> {
        let mut t = self.table.clone();
        for (k, v) in overrides {
            set_path(&mut t, k, v.clone())?;
        }
        let cfg = decode(t)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every level of the scenario's sweeps with its validated config.
    pub fn levels(&self) -> Result<Vec<(Level, ScenarioConfig)>, ScenarioError> {
        levels(&self.sweeps)
            .into_iter()
            .map(|l| {
                let cfg = self.config_with(&l.overrides)?;
                Ok((l, cfg))
            })
            .collect()
    }
}

fn decode(t: Table) -> Result<ScenarioConfig, ScenarioError> {
    serde_path_to_error::deserialize(Value::Table(t)).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        key_error(&path, message.lines().next().unwrap_or_default())
    })
}

fn parse_experiment(t: Table) -> Result<Vec<Sweep>, ScenarioError> {
    let mut sweeps = Vec::new();
    for (k, v) in t {
        match (k.as_str(), v) {
            ("sweep", Value::Array(items)) => {
                for item in items {
                    let Value::String(s) = item else {
                        return Err(key_error("experiment.sweep", "entries must be strings"));
                    };
                    sweeps.push(s.parse()?);
                }
            }
            ("sweep", _) => return Err(key_error("experiment.sweep", "must be an array of strings")),
            (other, _) => return Err(key_error(&format!("experiment.{other}"), "unknown key")),
        }
    }
    Ok(sweeps)
}

fn network_kind(user: &Table) -> Result<NetworkKind, ScenarioError> {
    let kind = user
        .get("network")
        .and_then(|n| n.get("kind"))
        .ok_or_else(|| key_error("network.kind", "required (cdi, ddi or rcut)"))?;
    kind.clone()
        .try_into()
        .map_err(|_| key_error("network.kind", format!("{kind} is not one of cdi, ddi, rcut")))
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set_path(t: &mut Table, path: &str, value: Value) -> Result<(), ScenarioError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| key_error(path, "empty key"))?;
    let mut cur = t;
    for (i, p) in parts.iter().enumerate() {
        cur = match cur.get_mut(*p) {
            Some(Value::Table(next)) => next,
            _ => return Err(key_error(&parts[..=i].join("."), "unknown section")),
        };
    }
    let value = match (cur.get(leaf), value) {
        (Some(Value::Integer(_)), Value::Float(f)) if f.fract() == 0.0 => Value::Integer(f as i64),
        (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
        (_, v) => v,
    };
    cur.insert(leaf.into(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.into()))
}

/// One swept key and its values. `mpr` and `confusion` are given in
/// percent; any other key is a dotted config path taking raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Config path and divisor applied to each value.
    fn target(&self) -> (&str, f64) {
        match self.key.as_str() {
            "mpr" => ("fleet.mpr", 100.0),
            "confusion" => ("confusion.share", 100.0),
            k => (k, 1.0),
        }
    }
}

impl FromStr for Sweep {
    type Err = ScenarioError;

    /// `key=v1,v2,...`; `a,b,...,z` expands the step `b - a` up to `z`.
    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| ScenarioError::Sweep {
            spec: spec.into(),
            message: m.into(),
        };
        let (key, list) = spec.split_once('=').ok_or_else(|| bad("expected key=v1,v2,..."))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(bad("empty key"));
        }
        let tokens: Vec<&str> = list.split(',').map(str::trim).collect();
        let mut values: Vec<f64> = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if tokens[i] == "..." {
                let n = values.len();
                let last = tokens.get(i + 1).ok_or_else(|| bad("'...' needs an end value"))?;
                let last: f64 = last.parse().map_err(|_| bad("end value is not a number"))?;
                if n < 2 {
                    return Err(bad("'...' needs two values before it"));
                }
                let (a, b) = (values[n - 2], values[n - 1]);
                let step = b - a;
                if !(step != 0.0 && (last - b) / step >= 0.0) {
                    return Err(bad("'...' step does not reach the end value"));
                }
                let count = ((last - b) / step + 1e-9).floor() as usize;
                for k in 1..=count {
                    values.push(b + step * k as f64);
                }
                if (values[values.len() - 1] - last).abs() > 1e-9 * last.abs().max(1.0) {
                    values.push(last);
                }
                i += 2;
            } else {
                let v: f64 = tokens[i].parse().map_err(|_| bad(&format!("{:?} is not a number", tokens[i])))?;
                values.push(v);
                i += 1;
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite"));
        }
        Ok(Sweep {
            key: key.into(),
            values,
        })
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}={}", self.key, vals.join(","))
    }
}

/// One point of a sweep: a label and the config keys it sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub label: String,
    pub overrides: Vec<(String, Value)>,
}

/// Cartesian product of the sweeps, first sweep outermost. Without sweeps
/// there is a single level labelled `base`.
pub fn levels(sweeps: &[Sweep]) -> Vec<Level> {
    let mut out = vec![Level {
        label: String::new(),
        overrides: Vec::new(),
    }];
    for s in sweeps {
        let (path, div) = s.target();
        out = out
            .into_iter()
            .flat_map(|l| {
                s.values.iter().map(move |&v| {
                    let mut next = l.clone();
                    if !next.label.is_empty() {
                        next.label.push(';');
                    }
                    next.label.push_str(&format!("{}={}", s.key, v));
                    next.overrides.push((path.into(), Value::Float(v / div)));
                    next
                })
            })
            .collect();
    }
    if sweeps.is_empty() {
        out[0].label = "base".into();
    }
    out
}
