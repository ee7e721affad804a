//! Run configuration: `key = value` files merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

/// Every key a config file or flag may set, with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("prior", "gamma"),
    ("beta", "0.5"),
    ("n", "1"),
    ("n_prior", ""),
    ("paths", "100000"),
    ("dt", "0.0001"),
    ("seed", "1"),
    ("x0", "0"),
    ("t_pin", "1"),
    ("time", "0.3"),
    ("window", "0.1"),
    ("bin", "1.9,2.1"),
    ("probe", ""),
    ("dump", "0"),
    ("case", "all"),
    ("epsilon", "1e-6"),
    ("z_max", "8"),
    ("nodes", "800"),
    ("out", "out"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveClassical,
    SolveGamma,
    SolveBeta,
    Simulate,
    Validate,
    Urn,
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveClassical => "solve-classical",
            Command::SolveGamma => "solve-gamma",
            Command::SolveBeta => "solve-beta",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
            Command::Urn => "urn",
            Command::Figures => "figures",
        }
    }
}

/// Where the pinning time comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Gamma,
    Beta,
    /// θ known and equal to `t_pin`.
    Fixed,
    Table(PathBuf),
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(PriorSpec::Gamma),
            "beta" => Ok(PriorSpec::Beta),
            "fixed" => Ok(PriorSpec::Fixed),
            _ => match s.strip_prefix("table:") {
                Some(p) if !p.is_empty() => Ok(PriorSpec::Table(PathBuf::from(p))),
                _ => Err(Error::Config(format!(
                    "unknown prior {s:?}; expected gamma, beta, fixed or table:<path>"
                ))),
            },
        }
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Gamma => f.write_str("gamma"),
            PriorSpec::Beta => f.write_str("beta"),
            PriorSpec::Fixed => f.write_str("fixed"),
            PriorSpec::Table(p) => write!(f, "table:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureCase {
    Gamma,
    Filter,
    Beta,
    All,
}

impl FromStr for FigureCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(FigureCase::Gamma),
            "filter" => Ok(FigureCase::Filter),
            "beta" => Ok(FigureCase::Beta),
            "all" => Ok(FigureCase::All),
            _ => Err(Error::Config(format!(
                "unknown figure case {s:?}; expected gamma, filter, beta or all"
            ))),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.iter().any(|(name, _)| *name == key) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text)
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub prior: PriorSpec,
    pub beta: f64,
    /// Gamma shape index for filters, or the urn size.
    pub n: u32,
    /// Urn prior over n as `n:weight` pairs.
    pub n_prior: Vec<(u32, f64)>,
    pub paths: u64,
    pub dt: f64,
    pub seed: u64,
    pub x0: f64,
    pub t_pin: f64,
    /// Time at which the validators look at the paths.
    pub time: f64,
    pub window: f64,
    pub bin: (f64, f64),
    pub probe: Vec<f64>,
    pub dump: u64,
    pub case: FigureCase,
    pub epsilon: f64,
    pub z_max: f64,
    pub nodes: usize,
    pub out: PathBuf,
    resolved: BTreeMap<String, String>,
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = &map[key];
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

fn list<T: FromStr>(raw: &str, key: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

impl RunConfig {
    /// Merges defaults, then the file, then flags (later wins).
    pub fn resolve(
        command: Command,
        file: &BTreeMap<String, String>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut map: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in file.iter().chain(flags) {
            if !map.contains_key(k) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
            map.insert(k.clone(), v.clone());
        }

        let bin: Vec<f64> = list(&map["bin"], "bin")?;
        let [lo, hi] = bin[..] else {
            return Err(Error::config("bin: expected two numbers lo,hi"));
        };
        let n_prior = map["n_prior"]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|pair| {
                let (n, w) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("n_prior: expected n:weight, got {pair:?}")))?;
                let n = n.trim().parse().map_err(|_| Error::Config(format!("n_prior: bad n {n:?}")))?;
                let w = w.trim().parse().map_err(|_| Error::Config(format!("n_prior: bad weight {w:?}")))?;
                Ok((n, w))
            })
            .collect::<Result<Vec<_>>>()?;

        let cfg = Self {
            command,
            prior: get(&map, "prior")?,
            beta: get(&map, "beta")?,
            n: get(&map, "n")?,
            n_prior,
            paths: get(&map, "paths")?,
            dt: get(&map, "dt")?,
            seed: get(&map, "seed")?,
            x0: get(&map, "x0")?,
            t_pin: get(&map, "t_pin")?,
            time: get(&map, "time")?,
            window: get(&map, "window")?,
            bin: (lo, hi),
            probe: list(&map["probe"], "probe")?,
            dump: get(&map, "dump")?,
            case: get(&map, "case")?,
            epsilon: get(&map, "epsilon")?,
            z_max: get(&map, "z_max")?,
            nodes: get(&map, "nodes")?,
            out: PathBuf::from(&map["out"]),
            resolved: map,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("dt", self.dt),
            ("t_pin", self.t_pin),
            ("epsilon", self.epsilon),
            ("z_max", self.z_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if self.n == 0 || self.paths == 0 || self.nodes < 2 {
            return Err(Error::config("n, paths and nodes must be positive"));
        }
        if !(self.time >= 0.0 && self.window >= 0.0 && self.x0.is_finite()) {
            return Err(Error::config("time and window must be nonnegative, x0 finite"));
        }
        Ok(())
    }

    /// `key = value` lines echoing every resolved setting.
    pub fn manifest(&self) -> String {
        let mut s = format!("command = {}\n", self.command.name());
        for (k, v) in &self.resolved {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn file_parsing() {
        let map = parse_config_text("# header\nbeta = 2 # inline\n\n z-max=10\n").unwrap();
        assert_eq!(map["beta"], "2");
        assert_eq!(map["z_max"], "10");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("beta 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = flags(&[("beta", "2"), ("seed", "9")]);
        let cfg = RunConfig::resolve(Command::SolveGamma, &file, &flags(&[("beta", "0.25")])).unwrap();
        assert_eq!(cfg.beta, 0.25);
        assert_eq!(cfg.seed, 9);
        assert!(cfg.manifest().contains("beta = 0.25\n"));
        assert!(cfg.manifest().starts_with("command = solve-gamma\n"));
    }

    #[test]
    fn structured_values() {
        let cfg = RunConfig::resolve(
            Command::Urn,
            &BTreeMap::new(),
            &flags(&[("n_prior", "2:0.5, 4:0.5"), ("bin", "-2.1,-1.9"), ("prior", "table:p.csv")]),
        )
        .unwrap();
        assert_eq!(cfg.n_prior, vec![(2, 0.5), (4, 0.5)]);
        assert_eq!(cfg.bin, (-2.1, -1.9));
        assert_eq!(cfg.prior, PriorSpec::Table("p.csv".into()));
        let bad = RunConfig::resolve(Command::Urn, &BTreeMap::new(), &flags(&[("beta", "-1")]));
        assert!(bad.is_err());
        assert!("table:".parse::<PriorSpec>().is_err());
    }
}
