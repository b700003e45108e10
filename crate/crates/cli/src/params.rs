//! Parameter resolution: command-line flags, then `FBMCLT_*` environment
//! variables (merged by clap), then the `key = value` config file, then the
//! per-subcommand defaults.

use std::collections::BTreeMap;
use std::fs;
use std::str::FromStr;

use clap::Args;
use fbmclt::{Error, Hurst, Result, Scheme};

/// Keys accepted both as flags and in config files.
pub const KEYS: [&str; 13] =
    ["q", "H", "k", "s", "t", "reps", "samples", "seed", "tol", "scheme", "resolution", "output", "format"];

#[derive(Args, Debug, Default)]
pub struct Flags {
    /// Iteration order (q ≥ 2).
    #[arg(long, global = true, env = "FBMCLT_Q")]
    pub q: Option<String>,
    /// Hurst parameter in (1/2, 1).
    #[arg(long = "H", global = true, env = "FBMCLT_H")]
    pub h: Option<String>,
    /// Base k > 1, or a comma-separated list (T for lemma41).
    #[arg(long, global = true, env = "FBMCLT_K")]
    pub k: Option<String>,
    /// First time argument of the oracle (defaults to t).
    #[arg(long, global = true, env = "FBMCLT_S")]
    pub s: Option<String>,
    /// Checkpoint(s) t, comma-separated; the horizon for windings.
    #[arg(long, global = true, env = "FBMCLT_T")]
    pub t: Option<String>,
    /// Monte Carlo replications of the path experiments.
    #[arg(long, global = true, env = "FBMCLT_REPS")]
    pub reps: Option<String>,
    /// Sample count of Monte Carlo quadrature.
    #[arg(long, global = true, env = "FBMCLT_SAMPLES")]
    pub samples: Option<String>,
    /// Master seed (64-bit).
    #[arg(long, global = true, env = "FBMCLT_SEED")]
    pub seed: Option<String>,
    /// Relative tolerance of deterministic quadrature.
    #[arg(long, global = true, env = "FBMCLT_TOL")]
    pub tol: Option<String>,
    /// Riemann-sum scheme: left_point or trapezoid.
    #[arg(long, global = true, env = "FBMCLT_SCHEME")]
    pub scheme: Option<String>,
    /// Geometric grid intervals on [1, horizon].
    #[arg(long, global = true, env = "FBMCLT_RESOLUTION")]
    pub resolution: Option<String>,
    /// Report file; standard output if absent.
    #[arg(long, global = true, env = "FBMCLT_OUTPUT")]
    pub output: Option<String>,
    /// Report format: json or csv.
    #[arg(long, global = true, env = "FBMCLT_FORMAT")]
    pub format: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "FBMCLT_THREADS")]
    pub threads: Option<String>,
    /// Plain-text `key = value` config file.
    #[arg(long, global = true, env = "FBMCLT_CONFIG")]
    pub config: Option<String>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_error(format!("config line {}: unknown key {key:?}", n + 1)));
        }
        if map.insert(key.to_owned(), value.trim().to_owned()).is_some() {
            return Err(config_error(format!("config line {}: duplicate key {key:?}", n + 1)));
        }
    }
    Ok(map)
}

/// Resolved parameter lookup for one invocation.
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut values = match &flags.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        let given = [
            ("q", &flags.q),
            ("H", &flags.h),
            ("k", &flags.k),
            ("s", &flags.s),
            ("t", &flags.t),
            ("reps", &flags.reps),
            ("samples", &flags.samples),
            ("seed", &flags.seed),
            ("tol", &flags.tol),
            ("scheme", &flags.scheme),
            ("resolution", &flags.resolution),
            ("output", &flags.output),
            ("format", &flags.format),
        ];
        for (key, v) in given {
            if let Some(v) = v {
                values.insert(key.to_owned(), v.clone());
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(v) => parse_one(key, v),
            None => Ok(default),
        }
    }

    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            Some(v) => v.split(',').map(|x| parse_one(key, x.trim())).collect(),
            None => Ok(default.to_vec()),
        }
    }

    pub fn hurst(&self) -> Result<Hurst> {
        Hurst::new(self.get("H", 0.75)?)
    }

    pub fn q(&self) -> Result<usize> {
        let q = self.get("q", 2usize)?;
        if q < 2 {
            return Err(Error::Domain(format!("iteration order q must be at least 2, got {q}")));
        }
        Ok(q)
    }

    pub fn positive(&self, key: &str, default: u64) -> Result<u64> {
        let v = self.get(key, default)?;
        if v == 0 {
            return Err(config_error(format!("{key} must be positive")));
        }
        Ok(v)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.raw("scheme").map_or(Ok(Scheme::LeftPoint), |v| v.parse())
    }

    pub fn format(&self) -> Result<Format> {
        match self.raw("format").unwrap_or("json") {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(config_error(format!("format must be json or csv, got {other:?}"))),
        }
    }
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| config_error(format!("cannot parse {key} = {v:?}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}
