//! Run configuration: `key = value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use wavekit::asymptotics::AsymptoteMethod;
use wavekit::observables::{FieldOptions, GridSpec};
use wavekit::{Error, Kinematics, Method, ModelKind, Result, Vec3};

/// Keys accepted in config files.
pub const KEYS: [&str; 22] = [
    "model",
    "mass",
    "momentum",
    "sigma_p",
    "table",
    "rel_tol",
    "abs_tol",
    "max_subdivisions",
    "grid",
    "half_extent",
    "field_method",
    "output",
    "format",
    "threads",
    "t",
    "times",
    "measure",
    "radii",
    "method",
    "samples",
    "seed",
    "step",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidInput(format!("unknown format '{s}', expected csv or json"))),
        }
    }
}

/// Inclusive, evenly spaced lab times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSpan {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl TimeSpan {
    pub fn times(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        let dt = (self.stop - self.start) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.stop } else { self.start + dt * i as f64 }).collect()
    }
}

impl FromStr for TimeSpan {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("time span must be start:stop:n, got '{s}'"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, n] = parts[..] else { return Err(bad()) };
        let span = TimeSpan {
            start: a.parse().map_err(|_| bad())?,
            stop: b.parse().map_err(|_| bad())?,
            n: n.parse().map_err(|_| bad())?,
        };
        if span.n == 0 || !span.start.is_finite() || !span.stop.is_finite() || span.stop < span.start {
            return Err(Error::InvalidInput(format!("time span needs n ≥ 1 and finite start ≤ stop, got '{s}'")));
        }
        Ok(span)
    }
}

/// Asymptote methods selected with `method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Methods {
    TimeDomain,
    Spectral,
    Both,
}

impl Methods {
    pub fn list(self) -> Vec<AsymptoteMethod> {
        match self {
            Methods::TimeDomain => vec![AsymptoteMethod::TimeDomain],
            Methods::Spectral => vec![AsymptoteMethod::Spectral],
            Methods::Both => vec![AsymptoteMethod::TimeDomain, AsymptoteMethod::Spectral],
        }
    }
}

impl FromStr for Methods {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Methods::Both),
            other => Ok(match other.parse::<AsymptoteMethod>()? {
                AsymptoteMethod::TimeDomain => Methods::TimeDomain,
                AsymptoteMethod::Spectral => Methods::Spectral,
            }),
        }
    }
}

/// Everything a run depends on. Two runs with equal configs write identical
/// output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelKind,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub sigma_p: f64,
    pub table: Option<PathBuf>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub grid: usize,
    pub half_extent: f64,
    pub field_method: Method,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub t: Option<TimeSpan>,
    pub times: Option<Vec<f64>>,
    pub measure: bool,
    pub radii: Option<Vec<f64>>,
    pub method: Methods,
    pub samples: usize,
    pub seed: u64,
    pub step: f64,
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses a config file body. Blank lines and lines starting with `#` are
/// skipped; values may be wrapped in double quotes.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidInput(format!("config line {}: expected 'key = value', got '{line}'", i + 1)));
        };
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidInput(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        let value = value.trim();
        let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
        if out.insert(key.clone(), value.to_string()).is_some() {
            return Err(Error::InvalidInput(format!("config line {}: '{key}' is set twice", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn list(key: &str, s: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("{key}: cannot parse '{v}' as a number"))))
        .collect::<Result<_>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{key}: expected a list of finite numbers, got '{s}'")));
    }
    Ok(values)
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::InvalidInput(format!("{key}: cannot parse '{v}': {e}"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{key} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Merges file values with flags (flags win), applies defaults and checks
    /// everything that can be checked before computing.
    pub fn resolve(
        command: &str,
        file: BTreeMap<String, String>,
        flags: &[(String, String)],
        env_threads: Option<String>,
    ) -> Result<Self> {
        let mut merged = file;
        for (k, v) in flags {
            merged.insert(normalize_key(k), v.clone());
        }
        if !merged.contains_key("threads") {
            if let Some(v) = env_threads.filter(|v| !v.trim().is_empty()) {
                merged.insert("threads".into(), v.trim().to_string());
            }
        }
        let v = Values(merged);
        let momentum = match v.0.get("momentum") {
            None => [0.0; 3],
            Some(s) => {
                let p = list("momentum", s)?;
                <[f64; 3]>::try_from(p.as_slice())
                    .map_err(|_| Error::InvalidInput(format!("momentum needs three components, got '{s}'")))?
            }
        };
        let default_format = match command {
            "moments" | "continuity" => Format::Json,
            _ => Format::Csv,
        };
        let cfg = RunConfig {
            command: command.to_string(),
            model: v.or("model", ModelKind::GaussianNoncov)?,
            mass: v.or("mass", 1.0)?,
            momentum,
            sigma_p: v.or("sigma_p", 0.01)?,
            table: v.get("table")?,
            rel_tol: positive("rel_tol", v.or("rel_tol", FieldOptions::default().rel_tol)?)?,
            abs_tol: positive("abs_tol", v.or("abs_tol", FieldOptions::default().abs_tol)?)?,
            max_subdivisions: v.or("max_subdivisions", FieldOptions::default().max_subdivisions)?,
            grid: v.or("grid", GridSpec::default().n)?,
            half_extent: positive("half_extent", v.or("half_extent", GridSpec::default().half_extent)?)?,
            field_method: v.or("field_method", Method::Quadrature)?,
            output: v.get("output")?,
            format: v.or("format", default_format)?,
            threads: v.get("threads")?,
            t: v.get("t")?,
            times: v.0.get("times").map(|s| list("times", s)).transpose()?,
            measure: v.or("measure", false)?,
            radii: v.0.get("radii").map(|s| list("radii", s)).transpose()?,
            method: v.or("method", Methods::Spectral)?,
            samples: v.or("samples", 50)?,
            seed: v.or("seed", 0)?,
            step: positive("step", v.or("step", 0.01)?)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.kinematics()?;
        if self.model == ModelKind::TabulatedIsotropic && self.table.is_none() {
            return Err(Error::InvalidInput("tabulated-isotropic needs an envelope table".into()));
        }
        if self.model != ModelKind::TabulatedIsotropic && self.table.is_some() {
            return Err(Error::InvalidInput(format!("table is only used by tabulated-isotropic, not {}", self.model)));
        }
        if self.grid < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {}", self.grid)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidInput("threads must be positive".into()));
        }
        match self.command.as_str() {
            "moments" | "continuity" if self.format == Format::Csv => {
                return Err(Error::InvalidInput(format!("{} writes JSON only", self.command)));
            }
            "evolve" if self.t.is_none() => {
                return Err(Error::InvalidInput("evolve needs --t start:stop:n".into()));
            }
            "dispersion" if self.times.is_none() => {
                return Err(Error::InvalidInput("dispersion needs --times".into()));
            }
            "flux-asymptote" | "prob-asymptote" => {
                if let Some(bad) = self.radii.iter().flatten().find(|r| **r <= 0.0) {
                    return Err(Error::InvalidInput(format!("radii must be positive, got {bad}")));
                }
                let p = Vec3::from(self.momentum).norm();
                if p > 0.0 {
                    return Err(Error::NotRestFrame(p));
                }
            }
            "continuity" if self.samples == 0 => {
                return Err(Error::InvalidInput("samples must be positive".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn kinematics(&self) -> Result<Kinematics> {
        Kinematics::new(self.mass, Vec3::from(self.momentum), self.sigma_p)
    }

    pub fn field_options(&self) -> FieldOptions {
        FieldOptions { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_subdivisions: self.max_subdivisions }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { n: self.grid, half_extent: self.half_extent, method: self.field_method, field: self.field_options() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn parses_comments_quotes_and_dashes() {
        let m = parse_config("# run\n\nsigma-p = 0.02\nmodel = \"gaussian-cov-exact\"\n").unwrap();
        assert_eq!(m["sigma_p"], "0.02");
        assert_eq!(m["model"], "gaussian-cov-exact");
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed_lines() {
        assert!(parse_config("colour = red\n").is_err());
        assert!(parse_config("mass = 1\nmass = 2\n").is_err());
        assert!(parse_config("mass 1\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("mass = 2\nsigma_p = 0.02\n").unwrap();
        let cfg = RunConfig::resolve("moments", file, &flags(&[("mass", "3")]), None).unwrap();
        assert_eq!((cfg.mass, cfg.sigma_p), (3.0, 0.02));
    }

    #[test]
    fn every_flag_has_a_config_key() {
        use clap::CommandFactory;
        let cmd = crate::args::Cli::command();
        let mut ids: Vec<String> = cmd.get_arguments().map(|a| a.get_id().to_string()).collect();
        for sub in cmd.get_subcommands() {
            ids.extend(sub.get_arguments().map(|a| a.get_id().to_string()));
        }
        for id in ids {
            if id == "config" || id == "help" || id == "version" {
                continue;
            }
            assert!(KEYS.contains(&id.as_str()), "{id}");
        }
    }

    #[test]
    fn environment_threads_are_a_fallback() {
        let cfg = RunConfig::resolve("table1", BTreeMap::new(), &[], Some("3".into())).unwrap();
        assert_eq!(cfg.threads, Some(3));
        let cfg = RunConfig::resolve("table1", BTreeMap::new(), &flags(&[("threads", "2")]), Some("3".into())).unwrap();
        assert_eq!(cfg.threads, Some(2));
    }

    #[test]
    fn validation_errors() {
        let bad = |cmd: &str, f: &[(&str, &str)]| RunConfig::resolve(cmd, BTreeMap::new(), &flags(f), None).unwrap_err();
        assert!(matches!(bad("moments", &[("mass", "-1")]), Error::NonPositiveMass(_)));
        assert!(matches!(bad("moments", &[("sigma_p", "0")]), Error::NonPositiveWidth(_)));
        assert!(matches!(bad("moments", &[("momentum", "1,2")]), Error::InvalidInput(_)));
        assert!(matches!(bad("moments", &[("format", "csv")]), Error::InvalidInput(_)));
        assert!(matches!(bad("evolve", &[]), Error::InvalidInput(_)));
        assert!(matches!(bad("dispersion", &[("times", "0,x")]), Error::InvalidInput(_)));
        assert!(matches!(bad("flux-asymptote", &[("momentum", "0,0,0.1")]), Error::NotRestFrame(_)));
        assert!(matches!(bad("flux-asymptote", &[("radii", "100,-1")]), Error::InvalidInput(_)));
        assert!(matches!(bad("moments", &[("model", "tabulated-isotropic")]), Error::InvalidInput(_)));
    }

    #[test]
    fn time_span() {
        let s: TimeSpan = "0:10:3".parse().unwrap();
        assert_eq!(s.times(), vec![0.0, 5.0, 10.0]);
        assert_eq!("4:4:1".parse::<TimeSpan>().unwrap().times(), vec![4.0]);
        assert!("1:0:3".parse::<TimeSpan>().is_err());
        assert!("0:1".parse::<TimeSpan>().is_err());
    }
}
