//! Run configuration: defaults, a flat `key = value` file, and validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use npthin::Scheme;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => bail!("unknown format '{s}' (expected csv or json)"),
        }
    }
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Nyström size for single discretizations.
    pub n: usize,
    /// Nyström size per operator in density scans.
    pub scan_n: usize,
    pub m_max: u32,
    pub scheme: Scheme,
    /// Coverage tolerance of density scans.
    pub eps: f64,
    pub a: f64,
    pub scan_r_list: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub quasi_r_list: Vec<f64>,
    pub max_nodes: usize,
    pub pair_budget: f64,
    pub cache_dir: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 200,
            scan_n: npthin::spectra::SCAN_N,
            m_max: npthin::spectra::SCAN_M_MAX,
            scheme: Scheme::Product,
            eps: 0.02,
            a: 1.0,
            scan_r_list: vec![5.0, 10.0, 20.0, 40.0],
            lambda_grid: (-9..=9).map(|k| f64::from(k) * 0.05).collect(),
            quasi_r_list: vec![1e2, 1e3, 1e4],
            max_nodes: 200_000,
            pair_budget: 2e8,
            cache_dir: None,
            format: Format::Csv,
        }
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad number '{t}' in list")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty list");
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        bail!("non-finite value {x} in list");
    }
    Ok(v)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    v.parse::<T>().with_context(|| format!("bad value '{v}' for '{key}'"))
}

impl RunConfig {
    /// Apply `key = value` lines on top of `self`. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let ctx = || format!("line {}", i + 1);
            match k {
                "n" => self.n = num(k, v).with_context(ctx)?,
                "scan_n" => self.scan_n = num(k, v).with_context(ctx)?,
                "m_max" => self.m_max = num(k, v).with_context(ctx)?,
                "scheme" => self.scheme = v.parse().map_err(anyhow::Error::from).with_context(ctx)?,
                "eps" => self.eps = num(k, v).with_context(ctx)?,
                "a" => self.a = num(k, v).with_context(ctx)?,
                "scan_r_list" => self.scan_r_list = parse_list(v).with_context(ctx)?,
                "lambda_grid" => self.lambda_grid = parse_list(v).with_context(ctx)?,
                "quasi_r_list" => self.quasi_r_list = parse_list(v).with_context(ctx)?,
                "max_nodes" => self.max_nodes = num(k, v).with_context(ctx)?,
                "pair_budget" => self.pair_budget = num(k, v).with_context(ctx)?,
                "cache_dir" => self.cache_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
                "format" => self.format = v.parse().with_context(ctx)?,
                _ => bail!("line {}: unknown key '{k}'", i + 1),
            }
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.merge_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "scan_n = {}", self.scan_n);
        let _ = writeln!(s, "m_max = {}", self.m_max);
        let _ = writeln!(
            s,
            "scheme = {}",
            match self.scheme {
                Scheme::Product => "product",
                Scheme::Punctured => "punctured",
            }
        );
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "a = {}", self.a);
        let _ = writeln!(s, "scan_r_list = {}", join(&self.scan_r_list));
        let _ = writeln!(s, "lambda_grid = {}", join(&self.lambda_grid));
        let _ = writeln!(s, "quasi_r_list = {}", join(&self.quasi_r_list));
        let _ = writeln!(s, "max_nodes = {}", self.max_nodes);
        let _ = writeln!(s, "pair_budget = {}", self.pair_budget);
        if let Some(d) = &self.cache_dir {
            let _ = writeln!(s, "cache_dir = {}", d.display());
        }
        let _ = writeln!(s, "format = {}", self.format.as_str());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < npthin::spectra::MIN_NODES || self.scan_n < npthin::spectra::MIN_NODES {
            bail!("n and scan_n must be at least {}", npthin::spectra::MIN_NODES);
        }
        if !(self.eps > 0.0) {
            bail!("eps must be positive, got {}", self.eps);
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            bail!("a must be positive, got {}", self.a);
        }
        if !(self.pair_budget > 0.0) || self.max_nodes == 0 {
            bail!("budgets must be positive");
        }
        for (name, list) in [
            ("scan_r_list", &self.scan_r_list),
            ("lambda_grid", &self.lambda_grid),
            ("quasi_r_list", &self.quasi_r_list),
        ] {
            if list.is_empty() || list.iter().any(|x| !x.is_finite()) {
                bail!("{name} must be a non-empty list of finite numbers");
            }
        }
        if self.scan_r_list.iter().chain(&self.quasi_r_list).any(|&r| r < 1.0) {
            bail!("aspect ratios must be at least 1");
        }
        Ok(())
    }

    /// Cache directory: `NPTHIN_CACHE_DIR`, then the config, then the user
    /// cache directory.
    pub fn resolve_cache_dir(&self) -> Option<PathBuf> {
        if let Some(d) = std::env::var_os("NPTHIN_CACHE_DIR").filter(|d| !d.is_empty()) {
            return Some(PathBuf::from(d));
        }
        if let Some(d) = &self.cache_dir {
            return Some(d.clone());
        }
        let base = std::env::var_os("XDG_CACHE_HOME")
            .filter(|d| !d.is_empty())
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))?;
        Some(base.join("npthin"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
        assert_eq!(c.lambda_grid.len(), 19);
    }

    #[test]
    fn parse_overrides_and_errors() {
        let c = RunConfig::from_text("# comment\nn = 64\neps=0.01  # tight\nscheme = punctured\nformat = json\n")
            .unwrap();
        assert_eq!(c.n, 64);
        assert_eq!(c.eps, 0.01);
        assert_eq!(c.scheme, Scheme::Punctured);
        assert_eq!(c.format, Format::Json);
        assert!(RunConfig::from_text("bogus = 1").is_err());
        assert!(RunConfig::from_text("n = abc").is_err());
        assert!(RunConfig::from_text("eps = 0").is_err());
        assert!(RunConfig::from_text("eps = -1").is_err());
        assert!(RunConfig::from_text("n").is_err());
        assert!(RunConfig::from_text("scan_r_list = 5, x").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(
            n in 16usize..5000,
            eps in 1e-6f64..1.0,
            a in 0.1f64..10.0,
            rs in proptest::collection::vec(1.0f64..1e5, 1..6),
            lams in proptest::collection::vec(-0.5f64..0.5, 1..30),
            json in any::<bool>(),
        ) {
            let c = RunConfig {
                n,
                eps,
                a,
                scan_r_list: rs.clone(),
                quasi_r_list: rs,
                lambda_grid: lams,
                cache_dir: Some(PathBuf::from("/tmp/npthin cache")),
                format: if json { Format::Json } else { Format::Csv },
                ..RunConfig::default()
            };
            prop_assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
        }
    }
}
