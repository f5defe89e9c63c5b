//! Pipeline configuration: defaults, `key = value` files and overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::kbfeatures::{CountMode, KbFeatureConfig};
use crate::linkgraph::PageRankConfig;
use crate::model::DEFAULT_TRAIN_FRACTION;
use crate::rankeval::DEFAULT_POSITIVE_THRESHOLD;
use crate::tsv;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub pages: Option<PathBuf>,
    pub links: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub social_scores: Option<PathBuf>,
    pub damping: f64,
    pub pagerank_tol: f64,
    pub pagerank_max_iters: usize,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub positive_threshold: u8,
    pub top_n: usize,
    pub output_dir: PathBuf,
    pub type_predicate: String,
    pub social_predicate: String,
    pub count_mode: CountMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let pr = PageRankConfig::default();
        let kb = KbFeatureConfig::default();
        PipelineConfig {
            pages: None,
            links: None,
            categories: None,
            triples: None,
            labels: None,
            social_scores: None,
            damping: pr.damping,
            pagerank_tol: pr.tol,
            pagerank_max_iters: pr.max_iters,
            split_seed: 42,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            positive_threshold: DEFAULT_POSITIVE_THRESHOLD,
            top_n: 500_000,
            output_dir: PathBuf::from("out"),
            type_predicate: kb.type_predicate,
            social_predicate: kb.social_predicate,
            count_mode: kb.count_mode,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("invalid value {value:?} for {key}")))
}

impl PipelineConfig {
    /// Set one field by name. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let path = || Some(PathBuf::from(value));
        match key.as_str() {
            "pages" => self.pages = path(),
            "links" => self.links = path(),
            "categories" => self.categories = path(),
            "triples" => self.triples = path(),
            "labels" => self.labels = path(),
            "social_scores" => self.social_scores = path(),
            "damping" => self.damping = parse(&key, value)?,
            "pagerank_tol" => self.pagerank_tol = parse(&key, value)?,
            "pagerank_max_iters" => self.pagerank_max_iters = parse(&key, value)?,
            "split_seed" | "seed" => self.split_seed = parse(&key, value)?,
            "train_fraction" => self.train_fraction = parse(&key, value)?,
            "positive_threshold" | "threshold" => self.positive_threshold = parse(&key, value)?,
            "top_n" => self.top_n = parse(&key, value)?,
            "output_dir" | "out" => self.output_dir = PathBuf::from(value),
            "type_predicate" => self.type_predicate = value.to_string(),
            "social_predicate" => self.social_predicate = value.to_string(),
            "count_mode" => self.count_mode = value.parse().map_err(ConfigError)?,
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Apply a `key = value` config file. Relative input paths are taken
    /// relative to the file's directory; `output_dir` stays relative to the
    /// working directory.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = tsv::read_text(path).map_err(|e| ConfigError(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            self.set(key, value)?;
        }
        for slot in [
            &mut self.pages,
            &mut self.links,
            &mut self.categories,
            &mut self.triples,
            &mut self.labels,
            &mut self.social_scores,
        ] {
            if let Some(p) = slot.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(ConfigError(format!("damping {} not in (0, 1)", self.damping)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(ConfigError(format!("train_fraction {} not in (0, 1)", self.train_fraction)));
        }
        if !(1..=5).contains(&self.positive_threshold) {
            return Err(ConfigError(format!("threshold {} not in 1..=5", self.positive_threshold)));
        }
        if self.pagerank_tol.is_nan() || self.pagerank_tol <= 0.0 {
            return Err(ConfigError("pagerank_tol must be > 0".into()));
        }
        if self.pagerank_max_iters == 0 {
            return Err(ConfigError("pagerank_max_iters must be >= 1".into()));
        }
        if self.top_n == 0 {
            return Err(ConfigError("top_n must be >= 1".into()));
        }
        Ok(())
    }

    pub fn pagerank(&self) -> PageRankConfig {
        PageRankConfig {
            damping: self.damping,
            max_iters: self.pagerank_max_iters,
            tol: self.pagerank_tol,
        }
    }

    pub fn kb_features(&self) -> KbFeatureConfig {
        KbFeatureConfig {
            type_predicate: self.type_predicate.clone(),
            social_predicate: self.social_predicate.clone(),
            count_mode: self.count_mode,
        }
    }

    /// Canonical listing of every parameter that affects stage outputs.
    /// File locations are left out so relocated runs hash the same.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "damping={}", tsv::fmt_real(self.damping));
        let _ = writeln!(out, "pagerank_tol={}", tsv::fmt_real(self.pagerank_tol));
        let _ = writeln!(out, "pagerank_max_iters={}", self.pagerank_max_iters);
        let _ = writeln!(out, "split_seed={}", self.split_seed);
        let _ = writeln!(out, "train_fraction={}", tsv::fmt_real(self.train_fraction));
        let _ = writeln!(out, "positive_threshold={}", self.positive_threshold);
        let _ = writeln!(out, "top_n={}", self.top_n);
        let _ = writeln!(out, "type_predicate={}", self.type_predicate);
        let _ = writeln!(out, "social_predicate={}", self.social_predicate);
        let _ = writeln!(out, "count_mode={}", self.count_mode.as_str());
        out
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }
}
