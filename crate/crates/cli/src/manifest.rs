//! Run manifests: a `key=value` record written next to every run's outputs.
//!
//! The exact argument vector is kept one argument per line (`arg.N`), and
//! each resolved simulation profile is embedded as `profile.<role>.<field>`
//! so a rerun does not depend on profile files that may have changed since.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use swarmdisc::sim::SimProfile;

use crate::error::{read_error, CliError};

pub const MANIFEST_HEADER: &str = "# swarmdisc manifest v1";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub args: Vec<String>,
    /// Resolved profiles by role (`main`, or the profile name in ablations).
    pub profiles: BTreeMap<String, SimProfile>,
    pub params: Vec<(String, String)>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String]) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            args: args.to_vec(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    pub fn output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MANIFEST_HEADER}\ntool_version={}\nsubcommand={}\n",
            self.tool_version, self.subcommand
        );
        for (i, a) in self.args.iter().enumerate() {
            out.push_str(&format!("arg.{i}={}\n", escape(a)));
        }
        for (role, profile) in &self.profiles {
            for line in profile.to_text().lines() {
                out.push_str(&format!("profile.{role}.{line}\n"));
            }
        }
        for (k, v) in &self.params {
            out.push_str(&format!("param.{k}={}\n", escape(v)));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            out.push_str(&format!("output.{i}={}\n", escape(o)));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_HEADER) {
            return Err(format!("missing header '{MANIFEST_HEADER}'"));
        }
        let mut m = RunManifest::default();
        let mut args = BTreeMap::new();
        let mut profile_text: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {n}: expected key=value"))?;
            let value = unescape(value).ok_or_else(|| format!("line {n}: bad escape"))?;
            if key == "tool_version" {
                m.tool_version = value;
            } else if key == "subcommand" {
                m.subcommand = value;
            } else if let Some(idx) = key.strip_prefix("arg.") {
                let idx: usize = idx.parse().map_err(|_| format!("line {n}: bad argument index"))?;
                args.insert(idx, value);
            } else if let Some(rest) = key.strip_prefix("profile.") {
                let (role, field) = rest.split_once('.').ok_or_else(|| format!("line {n}: bad profile key"))?;
                let text = profile_text.entry(role.to_string()).or_default();
                text.push_str(&format!("{field}={value}\n"));
            } else if let Some(k) = key.strip_prefix("param.") {
                m.params.push((k.to_string(), value));
            } else if key.starts_with("output.") {
                m.outputs.push(value);
            } else {
                return Err(format!("line {n}: unknown key '{key}'"));
            }
        }
        if args.keys().copied().ne(0..args.len()) {
            return Err("argument indices are not contiguous".into());
        }
        m.args = args.into_values().collect();
        for (role, text) in profile_text {
            let profile = SimProfile::parse(&text).map_err(|e| format!("profile '{role}': {e}"))?;
            m.profiles.insert(role, profile);
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_text()).map_err(CliError::output(&path))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| read_error(path, e))?;
        Self::parse(&text).map_err(|e| CliError::InputFormat(format!("{}: {e}", path.display())))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            '\\' => out.push('\\'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            _ => return None,
        }
    }
    Some(out)
}
