//! `key = value` service configuration.
//!
//! ```text
//! # addresses
//! transcribe_addr = 127.0.0.1:8001
//! hyphen_addr     = 127.0.0.1:8002
//! unknown_addr    = 127.0.0.1:8003
//! # models (relative paths are resolved against the config file)
//! lm            = toy.arpa
//! counts        = counts.tsv
//! vocab         = vocab.tsv
//! names         = persons.txt, places.txt
//! abbreviations = abbrev.tsv
//! alphabet      = labels.txt
//! # decoding
//! beam_width = 128
//! use_lm     = true
//! alpha      = 0.3
//! beta       = 1.5
//! # chain
//! skip_threshold = 0
//! # acoustic backend: mock-registry or lattice-passthrough
//! backend  = mock-registry
//! registry = registry.tsv
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key {key:?}: {message}")]
    Value { key: String, message: String },
    #[error("{key} file {path} does not exist")]
    MissingFile { key: String, path: PathBuf },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    /// Looks lattices up by the SHA-256 of the uploaded PCM samples.
    #[default]
    MockRegistry,
    /// Only `/transcribe_lattice` is served; clients send RLAT directly.
    LatticePassthrough,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock-registry" => Ok(BackendKind::MockRegistry),
            "lattice-passthrough" => Ok(BackendKind::LatticePassthrough),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub transcribe_addr: SocketAddr,
    pub hyphen_addr: SocketAddr,
    pub unknown_addr: SocketAddr,
    pub alphabet: Option<PathBuf>,
    pub lm: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub vocab_min_count: u64,
    pub names: Vec<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub beam_width: usize,
    pub use_lm: bool,
    pub alpha: f64,
    pub beta: f64,
    pub tau: usize,
    pub capitalize_sentence_start: bool,
    /// Transcriptions with at most this many words skip the hyphen stage;
    /// 0 never skips.
    pub skip_threshold: usize,
    pub backend: BackendKind,
    pub registry: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            transcribe_addr: SocketAddr::from(([127, 0, 0, 1], 8001)),
            hyphen_addr: SocketAddr::from(([127, 0, 0, 1], 8002)),
            unknown_addr: SocketAddr::from(([127, 0, 0, 1], 8003)),
            alphabet: None,
            lm: None,
            counts: None,
            vocab: None,
            vocab_min_count: ctcfuse::corpus::DEFAULT_MIN_COUNT,
            names: Vec::new(),
            abbreviations: None,
            beam_width: 128,
            use_lm: true,
            alpha: 0.3,
            beta: 1.5,
            tau: 3,
            capitalize_sentence_start: false,
            skip_threshold: 0,
            backend: BackendKind::MockRegistry,
            registry: None,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_owned(),
        message: e.to_string(),
    })
}

impl ServiceConfig {
    /// Parses config text. Relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        let path = |raw: &str| Some(base.join(raw));
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            let (key, raw) = (key.trim(), raw.trim());
            match key {
                "transcribe_addr" => c.transcribe_addr = value(key, raw)?,
                "hyphen_addr" => c.hyphen_addr = value(key, raw)?,
                "unknown_addr" => c.unknown_addr = value(key, raw)?,
                "alphabet" => c.alphabet = path(raw),
                "lm" => c.lm = path(raw),
                "counts" => c.counts = path(raw),
                "vocab" => c.vocab = path(raw),
                "vocab_min_count" => c.vocab_min_count = value(key, raw)?,
                "names" => {
                    c.names = raw
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| base.join(s))
                        .collect()
                }
                "abbreviations" => c.abbreviations = path(raw),
                "beam_width" => c.beam_width = value(key, raw)?,
                "use_lm" => c.use_lm = value(key, raw)?,
                "alpha" => c.alpha = value(key, raw)?,
                "beta" => c.beta = value(key, raw)?,
                "tau" => c.tau = value(key, raw)?,
                "capitalize_sentence_start" => c.capitalize_sentence_start = value(key, raw)?,
                "skip_threshold" => c.skip_threshold = value(key, raw)?,
                "backend" => c.backend = value(key, raw)?,
                "registry" => c.registry = path(raw),
                other => {
                    return Err(ConfigError::Syntax {
                        line: i + 1,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Fails when a referenced file is missing or a setting is inconsistent.
    pub fn check(&self) -> Result<(), ConfigError> {
        let files = [
            ("alphabet", &self.alphabet),
            ("lm", &self.lm),
            ("counts", &self.counts),
            ("vocab", &self.vocab),
            ("abbreviations", &self.abbreviations),
            ("registry", &self.registry),
        ];
        for (key, p) in files {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(ConfigError::MissingFile {
                        key: key.into(),
                        path: p.clone(),
                    });
                }
            }
        }
        for p in &self.names {
            if !p.is_file() {
                return Err(ConfigError::MissingFile {
                    key: "names".into(),
                    path: p.clone(),
                });
            }
        }
        if self.beam_width == 0 {
            return Err(ConfigError::Invalid("beam_width must be at least 1".into()));
        }
        if self.tau == 0 {
            return Err(ConfigError::Invalid("tau must be at least 1".into()));
        }
        if self.use_lm && self.lm.is_none() {
            return Err(ConfigError::Invalid("use_lm = true needs an lm file".into()));
        }
        if self.backend == BackendKind::MockRegistry && self.registry.is_none() {
            return Err(ConfigError::Invalid("backend mock-registry needs a registry file".into()));
        }
        Ok(())
    }
}
