//! On-disk memo of grevlex bases and Hilbert numerators.
//!
//! Files live in `$KSTAB_CACHE_DIR/<sha256 of the problem file>.json`:
//!
//! ```json
//! {
//!   "format": "kstab-cache/1",
//!   "problem_sha256": "...",
//!   "grevlex_basis": ["y1*y2 - y3^2"],
//!   "numerator": [{"d": 0, "alpha": [0, 0], "c": "1"}]
//! }
//! ```
//!
//! A file with another `format` or hash is ignored. Loaded bases are
//! re-checked (generators reduce to zero, S-pairs reduce to zero) before use.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::series::HilbertNumerator;

pub const CACHE_ENV: &str = "KSTAB_CACHE_DIR";
pub const CACHE_FORMAT: &str = "kstab-cache/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumeratorTerm {
    pub d: u32,
    pub alpha: Vec<i64>,
    /// Decimal string; coefficients may exceed the JSON safe-integer range.
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub format: String,
    pub problem_sha256: String,
    pub grevlex_basis: Vec<String>,
    pub numerator: Option<Vec<NumeratorTerm>>,
}

impl CacheEntry {
    pub fn numerator(&self) -> Option<HilbertNumerator> {
        let terms = self.numerator.as_ref()?;
        let mut coefficients = BTreeMap::new();
        for t in terms {
            coefficients.insert((t.d, t.alpha.clone()), t.c.parse::<i128>().ok()?);
        }
        Some(HilbertNumerator { coefficients })
    }

    pub fn encode_numerator(n: &HilbertNumerator) -> Vec<NumeratorTerm> {
        n.coefficients
            .iter()
            .map(|((d, alpha), c)| NumeratorTerm { d: *d, alpha: alpha.clone(), c: c.to_string() })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    fn path(&self, sha: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{sha}.json")))
    }

    pub fn load(&self, sha: &str) -> Option<CacheEntry> {
        let text = std::fs::read_to_string(self.path(sha)?).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.format == CACHE_FORMAT && entry.problem_sha256 == sha).then_some(entry)
    }

    /// Best effort: write failures only cost a recomputation next time.
    pub fn store(&self, entry: &CacheEntry) {
        let Some(path) = self.path(&entry.problem_sha256) else { return };
        if let Some(dir) = path.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        if let Ok(text) = serde_json::to_string_pretty(entry) {
            let tmp = path.with_extension("json.tmp");
            if std::fs::write(&tmp, text).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
        }
    }
}
