//! Plain-text `key=value` configuration files. Command-line flags override
//! file values, which override built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use transrec::{Error, Result};

/// Environment variable naming a default configuration file.
pub const CONFIG_ENV: &str = "TRANSREC_CONFIG";

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads `path`, or the file named by [`CONFIG_ENV`] when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => p.into(),
                _ => return Ok(Self::default()),
            },
        };
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
                line: n as u64 + 1,
                reason: "expected key=value".into(),
            })?;
            values.insert(k.trim().replace('-', "_"), v.trim().to_owned());
        }
        Ok(Self { values })
    }

    /// Flag value, else file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("config key `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse()
                    .map_err(|e| Error::InvalidArgument(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }
}

/// Comma-separated list of numbers, as used for hyperparameter grids.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("`{t}` is not a number")))
        })
        .collect()
}

pub fn format_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = Settings::parse("# c\ndim = 7\nlearning-rate=0.1\n").unwrap();
        assert_eq!(s.pick(None, "dim", 10usize).unwrap(), 7);
        assert_eq!(s.pick(Some(3), "dim", 10usize).unwrap(), 3);
        assert_eq!(s.pick(None, "learning_rate", 0.05f64).unwrap(), 0.1);
        assert_eq!(s.pick(None, "seed", 4u64).unwrap(), 4);
        assert!(Settings::parse("oops").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("0, 0.01,1").unwrap(), vec![0.0, 0.01, 1.0]);
        assert!(parse_list("a").is_err());
        assert_eq!(format_list(&[0.0, 0.001]), "0,0.001");
    }
}
