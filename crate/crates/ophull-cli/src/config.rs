//! Flat key=value configuration files with CLI-flag override.
//!
//! Lines are `key=value`; blank lines and `#` comments are ignored. Intervals
//! are written `lo,hi` (a single number is a point interval), lists as
//! comma-separated values. Every key can be overridden by the matching
//! command-line flag.

use std::collections::BTreeMap;
use std::path::Path;

use ophull::{Error, FamilyParams, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidParam {
                    name: "config",
                    reason: format!("line {}: expected key=value, found {raw:?}", lineno + 1),
                });
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| Error::InvalidParam {
                name: key,
                reason: format!("cannot parse {raw:?}"),
            }),
        }
    }

    pub fn usize_value(&self, key: &'static str) -> Result<Option<usize>> {
        self.parsed(key)
    }

    pub fn u64_value(&self, key: &'static str) -> Result<Option<u64>> {
        self.parsed(key)
    }

    pub fn f64_value(&self, key: &'static str) -> Result<Option<f64>> {
        self.parsed(key)
    }

    pub fn interval(&self, key: &'static str) -> Result<Option<(f64, f64)>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => parse_interval(raw).map(Some).map_err(|reason| {
                Error::InvalidParam { name: key, reason }
            }),
        }
    }
}

pub fn parse_interval(raw: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| format!("cannot parse {s:?} as a number"))
    };
    match parts.as_slice() {
        [single] => {
            let v = parse(single)?;
            Ok((v, v))
        }
        [lo, hi] => Ok((parse(lo)?, parse(hi)?)),
        _ => Err(format!("expected `lo,hi` or a single number, found {raw:?}")),
    }
}

/// Parse a comma-separated list of nonnegative integers.
pub fn parse_usize_list(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| Error::InvalidParam {
                name: "list",
                reason: format!("cannot parse {s:?} as an integer"),
            })
        })
        .collect()
}

/// Sweeps must be non-empty and strictly ascending.
pub fn validate_sweep(name: &'static str, sweep: &[usize]) -> Result<()> {
    if sweep.is_empty() {
        return Err(Error::InvalidParam {
            name,
            reason: "sweep must not be empty".into(),
        });
    }
    if sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam {
            name,
            reason: format!("sweep must be strictly ascending, got {sweep:?}"),
        });
    }
    Ok(())
}

/// Family parameters from config keys, with optional explicit overrides.
pub struct FamilyOverrides {
    pub grid: Option<usize>,
    pub pairs: Option<usize>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

pub fn family_params(config: &Config, over: &FamilyOverrides) -> Result<FamilyParams> {
    let defaults = FamilyParams::default();
    Ok(FamilyParams {
        grid: over.grid.or(config.usize_value("grid")?).unwrap_or(defaults.grid),
        pairs: over.pairs.or(config.usize_value("pairs")?).unwrap_or(defaults.pairs),
        count: over.count.or(config.usize_value("count")?).unwrap_or(defaults.count),
        sigma: config.interval("sigma")?.unwrap_or(defaults.sigma),
        a: config.interval("a")?.unwrap_or(defaults.a),
        b: config.interval("b")?.unwrap_or(defaults.b),
        c1: config.interval("c1")?.unwrap_or(defaults.c1),
        c2: config.interval("c2")?.unwrap_or(defaults.c2),
        beta_interval: config.interval("beta")?.unwrap_or(defaults.beta_interval),
        seed: over.seed.or(config.u64_value("seed")?).unwrap_or(defaults.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_intervals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(
            &path,
            "# family\ngrid = 8\nsigma=0.1,0.2\nbeta=0.25\nseed=42\n\ncount=5\n",
        )
        .unwrap();
        let config = Config::load(&path).unwrap();
        let params = family_params(
            &config,
            &FamilyOverrides {
                grid: None,
                pairs: Some(3),
                count: None,
                seed: None,
            },
        )
        .unwrap();
        assert_eq!(params.grid, 8);
        assert_eq!(params.pairs, 3);
        assert_eq!(params.count, 5);
        assert_eq!(params.seed, 42);
        assert_eq!(params.sigma, (0.1, 0.2));
        assert_eq!(params.beta_interval, (0.25, 0.25));
    }

    #[test]
    fn rejects_malformed_lines_and_sweeps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "grid 8\n").unwrap();
        assert!(Config::load(&path).is_err());

        assert!(validate_sweep("dims", &[]).is_err());
        assert!(validate_sweep("dims", &[1, 3, 3]).is_err());
        assert!(validate_sweep("dims", &[0, 1, 2]).is_ok());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_usize_list("0, 1,2").unwrap(), vec![0, 1, 2]);
        assert!(parse_usize_list("1,x").is_err());
    }
}
