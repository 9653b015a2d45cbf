use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::DEFAULT_THRESHOLD_DAYS;
use crate::error::{Error, Result};
use crate::ingest::{CheckinRule, CrsMode, Source};

/// Kind of raw input file. A tweet file yields both check-ins and
/// ordinary tweets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Photo,
    Tweet,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Photo => "photo",
            SourceKind::Tweet => "tweet",
        }
    }

    pub fn source(self) -> Source {
        match self {
            SourceKind::Photo => Source::Photo,
            SourceKind::Tweet => Source::Tweet,
        }
    }

    /// Analysis sources derived from this kind of file.
    pub fn analysis_sources(self) -> &'static [Source] {
        match self {
            SourceKind::Photo => &[Source::Photo],
            SourceKind::Tweet => &[Source::Checkin, Source::Tweet],
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "photo" => Ok(SourceKind::Photo),
            "tweet" => Ok(SourceKind::Tweet),
            other => Err(Error::Config(format!("unknown source kind `{other}` (expected photo or tweet)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    pub kind: SourceKind,
    pub file: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default = "default_threshold_m")]
    pub threshold_m: f64,
    #[serde(default)]
    pub row_standardize: bool,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            threshold_m: default_threshold_m(),
            row_standardize: false,
        }
    }
}

/// Display names for report headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplayNames {
    pub photo: String,
    pub checkin: String,
    pub tweet: String,
}

impl Default for DisplayNames {
    fn default() -> Self {
        DisplayNames {
            photo: "Photos".into(),
            checkin: "Check-ins".into(),
            tweet: "Tweets".into(),
        }
    }
}

impl DisplayNames {
    pub fn of(&self, s: Source) -> &str {
        match s {
            Source::Photo => &self.photo,
            Source::Checkin => &self.checkin,
            Source::Tweet => &self.tweet,
        }
    }
}

/// Full pipeline configuration, read from a TOML file. Relative paths are
/// resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub zones: PathBuf,
    #[serde(default = "default_crs")]
    pub crs: CrsMode,
    #[serde(default = "default_threshold_days")]
    pub threshold_days: i64,
    /// Run the analyses on 0–1000 rescaled densities (raw densities otherwise).
    #[serde(default = "yes")]
    pub rescale: bool,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Reference point for the radial typology summary; defaults to the
    /// mean zone centroid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default = "default_ring_m")]
    pub ring_m: f64,
    /// Regex overriding the default check-in rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkin_pattern: Option<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub display: DisplayNames,
}

fn default_crs() -> CrsMode {
    CrsMode::Geographic
}
fn yes() -> bool {
    true
}
fn default_threshold_days() -> i64 {
    DEFAULT_THRESHOLD_DAYS
}
fn default_k() -> usize {
    6
}
fn default_restarts() -> usize {
    50
}
fn default_permutations() -> usize {
    999
}
fn default_alpha() -> f64 {
    0.05
}
fn default_ring_m() -> f64 {
    1000.0
}
fn default_threshold_m() -> f64 {
    500.0
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sources: Vec::new(),
            zones: PathBuf::new(),
            crs: default_crs(),
            threshold_days: default_threshold_days(),
            rescale: true,
            k: default_k(),
            restarts: default_restarts(),
            permutations: default_permutations(),
            alpha: default_alpha(),
            seed: 0,
            center: None,
            ring_m: default_ring_m(),
            checkin_pattern: None,
            out: default_out(),
            jobs: 0,
            weights: WeightsConfig::default(),
            display: DisplayNames::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Load a config file and make its relative paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.zones);
        fix(&mut self.out);
        self.sources.iter_mut().for_each(|s| fix(&mut s.file));
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the canonical JSON form. Input paths are replaced by the
    /// hashes of the files they name, and the output directory and thread
    /// count are left out, so the same run hashes the same anywhere.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        let by_content = |p: &mut PathBuf| {
            if let Ok(h) = super::manifest::sha256_file(p) {
                *p = PathBuf::from(h);
            }
        };
        by_content(&mut c.zones);
        c.sources.iter_mut().for_each(|s| by_content(&mut s.file));
        c.out = PathBuf::new();
        c.jobs = 0;
        let canonical = serde_json::to_string(&c).expect("config serializes to JSON");
        hex(&Sha256::digest(canonical.as_bytes()))
    }

    pub fn checkin_rule(&self) -> Result<CheckinRule> {
        match &self.checkin_pattern {
            Some(p) => CheckinRule::pattern(p),
            None => Ok(CheckinRule::default()),
        }
    }

    /// Analysis sources implied by the configured files, in canonical order.
    pub fn analysis_sources(&self) -> Vec<Source> {
        let mut out: Vec<Source> = self.sources.iter().flat_map(|s| s.kind.analysis_sources().iter().copied()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sources.is_empty() {
            return bad("no sources configured".into());
        }
        for kind in [SourceKind::Photo, SourceKind::Tweet] {
            if self.sources.iter().filter(|s| s.kind == kind).count() > 1 {
                return bad(format!("more than one {} source", kind.as_str()));
            }
        }
        for s in &self.sources {
            if !s.file.is_file() {
                return bad(format!("source `{}`: file {} not found", s.name, s.file.display()));
            }
        }
        if self.zones.as_os_str().is_empty() || !self.zones.is_file() {
            return bad(format!("zones file {} not found", self.zones.display()));
        }
        if self.threshold_days < 1 {
            return bad(format!("threshold_days must be at least 1, got {}", self.threshold_days));
        }
        if self.k < 1 || self.restarts < 1 {
            return bad("k and restarts must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if !(self.weights.threshold_m > 0.0 && self.weights.threshold_m.is_finite()) {
            return bad(format!("weights.threshold_m must be positive, got {}", self.weights.threshold_m));
        }
        if !(self.ring_m > 0.0 && self.ring_m.is_finite()) {
            return bad(format!("ring_m must be positive, got {}", self.ring_m));
        }
        if self.center.is_some_and(|c| !c.iter().all(|v| v.is_finite())) {
            return bad("center must be finite".into());
        }
        self.checkin_rule()?;
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
