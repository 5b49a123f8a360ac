//! Plain-text `key=value` run configuration.
//!
//! A config file supplies flags that are missing from the command line, so
//! explicit flags always win. The `.meta` sidecar written next to every
//! output file uses the same format and can be passed back with `--config`.

use std::collections::BTreeMap;

/// Keys that map to value-less switches.
const SWITCHES: &[&str] = &["tokens", "sequential"];
/// Keys recorded in sidecars that are not flags.
const IGNORED: &[&str] = &["command", "config", "version"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value, got {raw:?}", i + 1))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn has_flag(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// Appends the config file's entries (if `--config` is given) to `args` as
/// flags, skipping any key already present.
pub fn merge(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let mut extra = Vec::new();
    for (k, v) in parse(&text).map_err(|e| format!("{path}: {e}"))? {
        if IGNORED.contains(&k.as_str()) || has_flag(&args, &k) {
            continue;
        }
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" => extra.push(format!("--{k}")),
                "false" => {}
                _ => return Err(format!("{path}: {k} must be true or false, got {v:?}")),
            }
        } else {
            extra.push(format!("--{k}={v}"));
        }
    }
    args.extend(extra);
    Ok(args)
}

/// Resolved run configuration, rendered as a sidecar.
#[derive(Debug, Default)]
pub struct RunRecord {
    entries: BTreeMap<String, String>,
    command: String,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        Self { entries: BTreeMap::new(), command: command.to_string() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("command={}\nversion={}\n", self.command, env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.entries {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), self.command.clone().into());
        for (k, v) in &self.entries {
            m.insert(k.clone(), v.clone().into());
        }
        m.into()
    }
}
