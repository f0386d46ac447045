//! Flat `key=value` config files. Every subcommand flag can also be supplied
//! through the file named by `--config`; explicit flags win.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};

/// Parsed config file contents. An absent `--config` behaves like an empty
/// file.
#[derive(Debug, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (idx, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    idx + 1
                )
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// CLI value if given, else the parsed config entry, else none.
    pub fn setting<T>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key) {
            Some(text) => text
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}={text:?}: {e}")),
            None => Ok(None),
        }
    }

    /// Like [`setting`](Self::setting) but the value must come from
    /// somewhere.
    pub fn required<T>(&self, cli: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.setting(cli, key)?
            .ok_or_else(|| anyhow!("--{key} is required (flag or config file)"))
    }

    pub fn path(&self, cli: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>> {
        Ok(cli.or_else(|| self.raw(key).map(PathBuf::from)))
    }

    pub fn required_path(&self, cli: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.path(cli, key)?
            .ok_or_else(|| anyhow!("--{key} is required (flag or config file)"))
    }

    /// Comma-separated list, e.g. `hidden-grid=3,5,7,9`.
    pub fn list<T>(&self, cli: Option<String>, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(text) = cli.or_else(|| self.raw(key).map(String::from)) else {
            return Ok(None);
        };
        text.split(',')
            .map(str::trim)
            .filter(|piece| !piece.is_empty())
            .map(|piece| {
                piece
                    .parse::<T>()
                    .map_err(|e| anyhow!("{key} entry {piece:?}: {e}"))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Boolean switch: a `true` flag wins, otherwise the config entry.
    pub fn switch(&self, cli: bool, key: &str) -> Result<bool> {
        if cli {
            return Ok(true);
        }
        match self.raw(key) {
            Some(text) => text
                .parse::<bool>()
                .map_err(|e| anyhow!("config key {key}={text:?}: {e}")),
            None => Ok(false),
        }
    }
}
