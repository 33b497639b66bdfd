//! Flat `key = value` configuration files. Command-line flags win over
//! values read here, which win over built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const KEYS: &[&str] = &[
    "wordnet_dir",
    "vocab",
    "query",
    "sense",
    "depth",
    "threshold",
    "backfill",
    "max_in_flight",
    "per_host_delay_ms",
    "timeout_ms",
    "retry_failed",
    "kin_radius",
    "top_m",
    "include_correct",
    "format",
    "model",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    /// Relative paths in the file are taken relative to its directory.
    base: PathBuf,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected key = value", i + 1));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(format!("line {}: {key:?} given twice", i + 1));
            }
        }
        Ok(ConfigFile { values, base })
    }

    pub fn string(&self, key: &str) -> Option<String> {
        debug_assert!(KEYS.contains(&key));
        self.values.get(key).cloned()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.string(key).map(|v| self.base.join(v))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key}: invalid value {v:?}: {e}")),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, String> {
        match self.values.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(false),
            Some(v) if matches!(v.as_str(), "true" | "yes" | "1" | "on") => Ok(true),
            Some(v) if matches!(v.as_str(), "false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(format!("config key {key}: expected true or false, got {v:?}")),
        }
    }
}

/// Flag, then config file, then default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = ConfigFile::parse(
            "# comment\nthreshold = 40\nkin-radius=3\nbackfill = yes\nvocab = v.tsv\n",
            PathBuf::from("/etc/x"),
        )
        .unwrap();
        assert_eq!(c.parsed::<u32>("threshold").unwrap(), Some(40));
        assert_eq!(c.parsed::<u32>("kin_radius").unwrap(), Some(3));
        assert!(c.flag("backfill").unwrap());
        assert!(!c.flag("include_correct").unwrap());
        assert_eq!(c.path("vocab").unwrap(), PathBuf::from("/etc/x/v.tsv"));
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);

        assert!(ConfigFile::parse("colour = red\n", PathBuf::new()).unwrap_err().contains("unknown key"));
        assert!(ConfigFile::parse("threshold\n", PathBuf::new()).is_err());
        assert!(ConfigFile::parse("top_m=1\ntop_m=2\n", PathBuf::new()).is_err());
        let bad = ConfigFile::parse("threshold = many\n", PathBuf::new()).unwrap();
        assert!(bad.parsed::<u32>("threshold").is_err());
    }
}
