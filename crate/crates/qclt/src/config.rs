//! `key = value` experiment files.
//!
//! Keys are the long flag names of the chosen command (`n_paths` and
//! `n-paths` are both accepted), plus `command`. Blank lines and lines
//! starting with `#` are ignored. File entries are turned into flags placed
//! before the command-line flags, so the command line wins.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::error::{config, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (t, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected key = value", t + 1)))?;
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                return Err(config(format!("line {}: empty key", t + 1)));
            }
            if entries.iter().any(|(e, _)| *e == key) {
                return Err(config(format!("line {}: duplicate key `{key}`", t + 1)));
            }
            entries.push((key, v.trim().to_string()));
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Flags for subcommand `sub` of `root`. Unknown keys are rejected.
    pub fn to_flags(&self, root: &Command, sub: &str) -> Result<Vec<OsString>> {
        let cmd = root
            .find_subcommand(sub)
            .ok_or_else(|| config(format!("unknown command `{sub}`")))?;
        let mut out = Vec::new();
        for (key, value) in &self.entries {
            if key == "command" || key == "config" {
                continue;
            }
            let arg = cmd
                .get_arguments()
                .chain(root.get_arguments())
                .find(|a| a.get_long() == Some(key.as_str()))
                .ok_or_else(|| config(format!("unknown key `{key}` for `{sub}`")))?;
            match arg.get_action() {
                ArgAction::SetTrue => match value.as_str() {
                    "true" | "1" | "yes" => out.push(format!("--{key}").into()),
                    "false" | "0" | "no" => {}
                    _ => return Err(config(format!("`{key}` expects true or false"))),
                },
                _ => out.push(format!("--{key}={value}").into()),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = ConfigFile::parse("# comment\ncommand = clt\nn_paths = 1000\n\ncommon_seed=true\n").unwrap();
        assert_eq!(c.get("n-paths"), Some("1000"));
        assert_eq!(c.get("command"), Some("clt"));
        assert!(ConfigFile::parse("a = 1\na = 2").is_err());
        assert!(ConfigFile::parse("just words").is_err());
    }
}
