//! On-disk cache of Nyström spectra, one JSON record per key.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use npthin::{Family, Parity, SpectrumResult};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything that determines a computed spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub family: Family,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
    pub m: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parity: Option<Parity>,
    pub n: usize,
    pub scheme: String,
}

impl CacheKey {
    pub fn file_name(&self) -> String {
        let mut s = format!("{}-R{:?}", self.family, self.r);
        if let Some(a) = self.a {
            s += &format!("-a{a:?}");
        }
        s += &format!("-m{}", self.m);
        if let Some(p) = self.parity {
            s += &format!("-{p}");
        }
        s += &format!("-N{}-{}.json", self.n, self.scheme);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCacheRecord {
    pub schema_version: u32,
    pub library_version: String,
    pub key: CacheKey,
    pub wall_clock_s: f64,
    pub result: SpectrumResult,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    /// Stored record for `key`, if present, readable and matching.
    pub fn load(&self, key: &CacheKey) -> Option<SpectrumCacheRecord> {
        let path = self.path(key);
        let text = std::fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<SpectrumCacheRecord>(&text) {
            Ok(rec) if rec.schema_version == SCHEMA_VERSION && rec.key == *key => Some(rec),
            Ok(_) => {
                log::warn!("ignoring stale cache entry {}", path.display());
                None
            }
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Write via a temporary file in the same directory and rename.
    pub fn store(&self, rec: &SpectrumCacheRecord) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating cache directory {}", self.dir.display()))?;
        let path = self.path(&rec.key);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, rec)?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path)
            .with_context(|| format!("writing cache entry {}", path.display()))?;
        Ok(path)
    }
}

/// Read a spectrum from either a bare result or a cache record.
pub fn read_spectrum_file(path: &Path) -> Result<SpectrumResult> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(rec) = serde_json::from_str::<SpectrumCacheRecord>(&text) {
        return Ok(rec.result);
    }
    serde_json::from_str::<SpectrumResult>(&text)
        .with_context(|| format!("{} is neither a spectrum nor a cache record", path.display()))
}
