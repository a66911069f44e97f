//! Key-value configuration files.
//!
//! One `key = value` pair per line; blank lines and lines starting with `#`
//! are ignored. Keys are the long flag names with `-` replaced by `_`
//! (`permute_q`, `model_out`, ...), plus `threads` and `sequential`.
//! Unknown keys are rejected so that typos do not pass silently.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

const KEYS: &[&str] = &[
    "data", "response", "dim", "degree", "seed", "method", "top", "permute_q", "permute_reps", "q", "s0", "p0", "folds",
    "max_iters", "one_se", "sample_split", "model_out", "trace_out", "plot_dir", "example", "params", "n", "p",
    "reps", "methods", "out", "threads", "sequential",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                Self::parse(&text).map_err(|e| format!("{}: {e}", p.display()))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let k = k.trim().replace('-', "_");
            if !KEYS.contains(&k.as_str()) {
                return Err(format!("line {}: unknown key \"{k}\"", i + 1));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        debug_assert!(KEYS.contains(&key), "undeclared config key {key}");
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Failure::Usage(format!("config key {key}: cannot parse \"{v}\"")))
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_types_values() {
        let c = ConfigFile::parse("# comment\ndim = 7\n\nmodel-out=m.txt\none_se = true\n").unwrap();
        assert_eq!(c.get::<usize>("dim").unwrap(), Some(7));
        assert_eq!(c.get::<String>("model_out").unwrap().as_deref(), Some("m.txt"));
        assert_eq!(c.get::<bool>("one_se").unwrap(), Some(true));
        assert_eq!(c.get::<usize>("degree").unwrap(), None);
        assert!(c.get::<bool>("dim").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(ConfigFile::parse("dimm = 3").is_err());
        assert!(ConfigFile::parse("dim 3").is_err());
    }
}
