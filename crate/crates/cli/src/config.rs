//! Run configuration: flat `key=value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cbe_core::{registry_case, CaseSpec, GridScheme};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Raw settings keyed by long flag name with `-` normalised to `_`.
pub type Settings = BTreeMap<String, String>;

pub const KNOWN_KEYS: &[&str] = &[
    "case", "method", "order", "cells", "grid", "eps_min", "alpha", "rmax", "tend", "times", "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fvm,
    Ham,
    Ahpm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fvm => "fvm",
            Self::Ham => "ham",
            Self::Ahpm => "ahpm",
        }
    }
}

impl FromStr for Method {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "fvm" => Ok(Self::Fvm),
            "ham" => Ok(Self::Ham),
            "ahpm" => Ok(Self::Ahpm),
            _ => Err(CliError::Config(format!(
                "unknown method `{s}` (fvm, ham, ahpm)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Auto,
    Fixed(f64),
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(a) => write!(f, "{a}"),
        }
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub method: Method,
    pub order: usize,
    pub cells: usize,
    pub scheme: GridScheme,
    pub alpha: AlphaMode,
    pub rmax: f64,
    pub tend: f64,
    pub times: Vec<f64>,
    pub out: PathBuf,
}

impl RunConfig {
    /// Resolves settings against the case registry. `case` is mandatory;
    /// everything else has a default.
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        if let Some(k) = s.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown setting `{k}`")));
        }
        let case_id = s
            .get("case")
            .ok_or_else(|| CliError::Config("missing case id (set `case`)".into()))?;
        let base = registry_case(case_id)?;
        let method: Method = s
            .get("method")
            .map(|m| m.parse())
            .transpose()?
            .unwrap_or(Method::Fvm);
        // the third case is run at third order by default
        let order = parse_or(s, "order", if base.id == "ex3" { 3usize } else { 5 })?;
        let cells = parse_or(s, "cells", 300usize)?;
        let rmax = parse_or(s, "rmax", base.rmax)?;
        let tend = parse_or(s, "tend", base.tend)?;
        let case = base.with_rmax(rmax)?.with_tend(tend)?;

        let scheme = match s.get("grid").map(String::as_str).unwrap_or("uniform") {
            "uniform" => GridScheme::Uniform,
            "geometric" => GridScheme::Geometric {
                eps_min: parse_or(s, "eps_min", rmax * 1e-4)?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown grid `{other}` (uniform, geometric)"
                )))
            }
        };

        let alpha = match s.get("alpha").map(String::as_str).unwrap_or("auto") {
            "auto" => AlphaMode::Auto,
            v => {
                let a: f64 = parse_value("alpha", v)?;
                if !(-1.0..0.0).contains(&a) {
                    return Err(CliError::Config(format!(
                        "fixed alpha must lie in [-1, 0), got {a}"
                    )));
                }
                AlphaMode::Fixed(a)
            }
        };

        let times = match s.get("times") {
            Some(list) => parse_list::<f64>("times", list)?,
            None => (0..=10).map(|k| tend * k as f64 / 10.0).collect(),
        };
        check_times(&times, &case)?;

        Ok(Self {
            case: case.id.clone(),
            method,
            order,
            cells,
            scheme,
            alpha,
            rmax,
            tend,
            times,
            out: s
                .get("out")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs")),
        })
    }

    pub fn case_spec(&self) -> CliResult<CaseSpec> {
        Ok(registry_case(&self.case)?
            .with_rmax(self.rmax)?
            .with_tend(self.tend)?)
    }

    /// Resolved settings as ordered `(key, value)` pairs. The output
    /// directory is left out so that identical computations hash identically
    /// wherever they are written.
    pub fn entries(&self) -> Vec<(String, String)> {
        let grid = match self.scheme {
            GridScheme::Uniform => "uniform".to_string(),
            GridScheme::Geometric { eps_min } => format!("geometric:{eps_min:e}"),
        };
        let times: Vec<String> = self.times.iter().map(|t| format!("{t:e}")).collect();
        [
            ("case", self.case.clone()),
            ("method", self.method.to_string()),
            ("order", self.order.to_string()),
            ("cells", self.cells.to_string()),
            ("grid", grid),
            ("alpha", self.alpha.to_string()),
            ("rmax", format!("{:e}", self.rmax)),
            ("tend", format!("{:e}", self.tend)),
            ("times", times.join(",")),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn canonical(&self) -> String {
        canonical(&self.entries())
    }

    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }
}

pub fn canonical(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reads a flat config file: one `key=value` per line, `#` starts a comment.
pub fn read_settings(path: &Path) -> CliResult<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_settings(&text)
}

pub fn parse_settings(text: &str) -> CliResult<Settings> {
    let mut out = Settings::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key=value, got `{line}`", n + 1))
        })?;
        out.insert(normalise_key(k), v.trim().to_string());
    }
    Ok(out)
}

pub fn normalise_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

/// File settings overridden by command-line settings.
pub fn merge(file: Settings, cli: Settings) -> Settings {
    let mut merged = file;
    merged.extend(cli);
    merged
}

fn check_times(times: &[f64], case: &CaseSpec) -> CliResult<()> {
    if times.is_empty() {
        return Err(CliError::Config("need at least one output time".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "output times must be strictly ascending".into(),
        ));
    }
    if times.iter().any(|t| !(*t >= 0.0 && *t <= case.tend)) {
        return Err(CliError::Config(format!(
            "output times must lie in [0, {}]",
            case.tend
        )));
    }
    Ok(())
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_or<T: FromStr>(s: &Settings, key: &str, default: T) -> CliResult<T> {
    s.get(key)
        .map(|v| parse_value(key, v))
        .transpose()
        .map(|v| v.unwrap_or(default))
}

pub fn parse_list<T: FromStr>(key: &str, v: &str) -> CliResult<Vec<T>> {
    v.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_value(key, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_follow_case_registry() {
        let c = RunConfig::from_settings(&settings(&[("case", "ex3")])).unwrap();
        assert_eq!(c.rmax, 20.0);
        assert_eq!(c.tend, 0.5);
        assert_eq!(c.times.len(), 11);
        assert_eq!(c.times[10], 0.5);
        assert_eq!(c.method, Method::Fvm);
        assert_eq!(c.alpha, AlphaMode::Auto);
        assert_eq!(c.order, 3);
    }

    #[test]
    fn missing_case_is_a_config_error() {
        let err = RunConfig::from_settings(&settings(&[("method", "fvm")])).unwrap_err();
        assert_eq!(err.code(), 2);
    }

    #[test]
    fn bad_values_are_rejected() {
        for pairs in [
            vec![("case", "ex9")],
            vec![("case", "ex1"), ("alpha", "0.2")],
            vec![("case", "ex1"), ("alpha", "-1.5")],
            vec![("case", "ex1"), ("method", "rk")],
            vec![("case", "ex1"), ("times", "0,0.5,0.2")],
            vec![("case", "ex1"), ("times", "0,2")],
            vec![("case", "ex3"), ("tend", "1")],
            vec![("case", "ex1"), ("colour", "red")],
            vec![("case", "ex1"), ("cells", "many")],
        ] {
            let err = RunConfig::from_settings(&settings(&pairs)).unwrap_err();
            assert_eq!(err.code(), 2, "{pairs:?}");
        }
    }

    #[test]
    fn file_parsing_and_override() {
        let file = parse_settings("# comment\ncase = ex2\neps-min=0.01 # trailing\n\nmethod=ham\n")
            .unwrap();
        assert_eq!(file["eps_min"], "0.01");
        let merged = merge(file, settings(&[("method", "ahpm")]));
        assert_eq!(merged["method"], "ahpm");
        assert_eq!(merged["case"], "ex2");
        assert!(parse_settings("no equals sign").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::from_settings(&settings(&[("case", "ex1"), ("out", "a")])).unwrap();
        let b = RunConfig::from_settings(&settings(&[("case", "ex1"), ("out", "b")])).unwrap();
        let c = RunConfig::from_settings(&settings(&[("case", "ex1"), ("cells", "301")])).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
