//! Models loaded once at startup and the in-process versions of every
//! service operation. The HTTP handlers and the chain client both go
//! through these functions, so the two paths cannot drift apart.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use ctcfuse::audio::{mfcc, parse_wav, AudioError, MfccConfig};
use ctcfuse::corpus::{normalize_token, normalize_tokens, AbbreviationTable, CountTable, Vocabulary};
use ctcfuse::correction::{build_inventory, capitalize, restore_hyphens, HyphenInventory, NameList, UnknownConfig, UnknownCorrector};
use ctcfuse::lattice::load_rlat_with;
use ctcfuse::lm::load_arpa_file;
use ctcfuse::{beam_decode, Alphabet, FusionParams, LogitLattice, NGramModel};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{BackendKind, ServiceConfig};

/// Request-level failure. `BadRequest` is the client's fault, `Internal`
/// the server's.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("text exceeds {limit} bytes")]
    TooLarge { limit: usize },
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

fn read_text(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|e| LoadError::File {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn file_error(path: &Path, e: impl std::fmt::Display) -> LoadError {
    LoadError::File {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

/// Largest `text` parameter accepted by `/correct`.
pub const MAX_TEXT_BYTES: usize = 1 << 20;

/// Output of a `/correct` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub text: String,
    pub comments: Vec<String>,
}

/// Maps `sha256(pcm samples)` to lattices.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: HashMap<String, LogitLattice>,
}

impl Registry {
    /// Hex digest used as the registry key.
    pub fn digest(pcm: &[u8]) -> String {
        hex::encode(Sha256::digest(pcm))
    }

    pub fn insert(&mut self, pcm: &[u8], lattice: LogitLattice) {
        self.entries.insert(Self::digest(pcm), lattice);
    }

    pub fn get(&self, pcm: &[u8]) -> Option<&LogitLattice> {
        self.entries.get(&Self::digest(pcm))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads `sha256hex TAB lattice-path` lines; paths are relative to the
    /// registry file.
    pub fn load(path: &Path, alphabet: &Alphabet) -> Result<Self, LoadError> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (digest, rel) = line
                .split_once('\t')
                .ok_or_else(|| file_error(path, format!("line {}: expected digest<TAB>path", i + 1)))?;
            let digest = digest.trim().to_ascii_lowercase();
            if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(file_error(path, format!("line {}: bad sha256 digest", i + 1)));
            }
            let lpath = base.join(rel.trim());
            let bytes = std::fs::read(&lpath).map_err(|e| file_error(&lpath, e))?;
            let lattice = load_rlat_with(&bytes, alphabet).map_err(|e| file_error(&lpath, e))?;
            entries.insert(digest, lattice);
        }
        Ok(Self { entries })
    }
}

/// Everything the three services need, shared read-only.
#[derive(Debug, Clone)]
pub struct Models {
    pub alphabet: Alphabet,
    pub lm: Option<NGramModel>,
    pub params: FusionParams,
    pub counts: CountTable,
    pub inventory: HyphenInventory,
    pub names: NameList,
    pub capitalize_sentence_start: bool,
    pub unknown: UnknownCorrector,
    pub abbreviations: AbbreviationTable,
    pub backend: BackendKind,
    pub registry: Registry,
    pub skip_threshold: usize,
    pub mfcc: MfccConfig,
}

impl Models {
    /// Builds models from in-memory parts. The vocabulary defaults to the
    /// count table's unigrams at `vocab_min_count`.
    pub fn new(alphabet: Alphabet, lm: Option<NGramModel>, params: FusionParams, counts: CountTable, vocab: Vocabulary, names: NameList) -> Self {
        let inventory = build_inventory(&counts);
        let unknown = UnknownCorrector::new(vocab, counts.clone(), UnknownConfig::default());
        Self {
            alphabet,
            lm,
            params,
            counts,
            inventory,
            names,
            capitalize_sentence_start: false,
            unknown,
            abbreviations: AbbreviationTable::new(),
            backend: BackendKind::LatticePassthrough,
            registry: Registry::default(),
            skip_threshold: 0,
            mfcc: MfccConfig::default(),
        }
    }

    pub fn with_registry(mut self, registry: Registry) -> Self {
        self.backend = BackendKind::MockRegistry;
        self.registry = registry;
        self
    }

    pub fn with_skip_threshold(mut self, threshold: usize) -> Self {
        self.skip_threshold = threshold;
        self
    }

    /// Loads every file named in `config`.
    pub fn load(config: &ServiceConfig) -> Result<Self, LoadError> {
        config.check()?;
        let alphabet = match &config.alphabet {
            Some(p) => {
                let text = read_text(p)?;
                Alphabet::from_label_string(text.trim_end_matches(['\r', '\n'])).map_err(|e| file_error(p, e))?
            }
            None => Alphabet::romanian(),
        };
        let lm = match &config.lm {
            Some(p) => Some(load_arpa_file(p).map_err(|e| file_error(p, e))?),
            None => None,
        };
        let counts = match &config.counts {
            Some(p) => CountTable::from_tsv(&read_text(p)?).map_err(|e| file_error(p, e))?,
            None => CountTable::new(),
        };
        let vocab = match &config.vocab {
            Some(p) => Vocabulary::from_tsv(&read_text(p)?, config.vocab_min_count).map_err(|e| file_error(p, e))?,
            None => Vocabulary::from_counts(&counts, config.vocab_min_count),
        };
        let mut names = NameList::default();
        for p in &config.names {
            names.extend_from(&read_text(p)?);
        }
        let abbreviations = match &config.abbreviations {
            Some(p) => AbbreviationTable::parse_tsv(&read_text(p)?).map_err(|e| file_error(p, e))?,
            None => AbbreviationTable::new(),
        };
        let registry = match (&config.backend, &config.registry) {
            (BackendKind::MockRegistry, Some(p)) => Registry::load(p, &alphabet)?,
            _ => Registry::default(),
        };
        let params = FusionParams {
            alpha: config.alpha,
            beta: config.beta,
            beam_width: config.beam_width,
            use_lm: config.use_lm,
        };
        params.validate().map_err(|e| LoadError::Config(crate::config::ConfigError::Invalid(e.to_string())))?;
        let inventory = build_inventory(&counts);
        let unknown = UnknownCorrector::new(vocab, counts.clone(), UnknownConfig { tau: config.tau });
        Ok(Self {
            alphabet,
            lm,
            params,
            counts,
            inventory,
            names,
            capitalize_sentence_start: config.capitalize_sentence_start,
            unknown,
            abbreviations,
            backend: config.backend,
            registry,
            skip_threshold: config.skip_threshold,
            mfcc: MfccConfig::default(),
        })
    }

    fn decode(&self, lattice: &LogitLattice) -> Result<String, ServiceError> {
        let lm = if self.params.use_lm { self.lm.as_ref() } else { None };
        let mut best = beam_decode(lattice, &self.params, lm, 1).map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(best.remove(0).transcription)
    }

    /// `/transcribe`: validate the WAV, compute features, look the lattice
    /// up in the backend and decode it.
    pub fn transcribe_wav(&self, wav: &[u8]) -> Result<String, ServiceError> {
        let clip = parse_wav(wav).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        match mfcc(&clip, &self.mfcc) {
            Ok(_) | Err(AudioError::EmptyAudio) => {}
            Err(e) => return Err(ServiceError::BadRequest(e.to_string())),
        }
        match self.backend {
            BackendKind::LatticePassthrough => Err(ServiceError::BadRequest(
                "audio input is disabled by the lattice-passthrough backend; use /transcribe_lattice".into(),
            )),
            BackendKind::MockRegistry => {
                let lattice = self
                    .registry
                    .get(&clip.pcm_bytes())
                    .ok_or_else(|| ServiceError::BadRequest("no lattice registered for input".into()))?;
                self.decode(lattice)
            }
        }
    }

    /// `/transcribe_lattice`: decode an RLAT upload.
    pub fn transcribe_lattice(&self, rlat: &[u8]) -> Result<String, ServiceError> {
        let lattice = load_rlat_with(rlat, &self.alphabet).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        self.decode(&lattice)
    }

    /// Hyphen service `/correct`: normalize, restore hyphens, capitalize.
    pub fn correct_hyphen(&self, text: &str) -> Result<Correction, ServiceError> {
        check_size(text)?;
        let tokens = normalize_tokens(text);
        let restored = restore_hyphens(&tokens, &self.inventory, &self.counts);
        let capitalized = capitalize(&restored.tokens, &self.names, self.capitalize_sentence_start);
        let mut comments = restored.comments;
        for (before, after) in restored.tokens.iter().zip(&capitalized) {
            if before != after {
                comments.push(format!("{before}→{after} (capitalization)"));
            }
        }
        Ok(Correction {
            text: capitalized.join(" "),
            comments,
        })
    }

    /// Unknown-word service `/correct`. Tokens are normalized for lookup;
    /// a token that is not replaced keeps its original spelling, so casing
    /// restored by the hyphen stage survives.
    pub fn correct_unknown(&self, text: &str) -> Result<Correction, ServiceError> {
        check_size(text)?;
        let (originals, normalized): (Vec<&str>, Vec<String>) = text
            .split_whitespace()
            .filter_map(|t| normalize_token(t).map(|n| (t, n)))
            .unzip();
        let corrected = self.unknown.correct(&normalized);
        let tokens: Vec<&str> = originals
            .iter()
            .zip(&normalized)
            .zip(&corrected.tokens)
            .map(|((orig, norm), out)| if out == norm { *orig } else { out.as_str() })
            .collect();
        Ok(Correction {
            text: tokens.join(" "),
            comments: corrected.comments,
        })
    }

    /// True when the chain skips the hyphen stage for `transcription`.
    pub fn skips_hyphen(&self, transcription: &str) -> bool {
        skips_hyphen(self.skip_threshold, transcription)
    }

    /// The whole chain in-process: transcribe, hyphen (unless skipped),
    /// unknown words.
    pub fn run_chain(&self, input: &ChainInput) -> Result<ChainOutput, ServiceError> {
        let transcription = match input {
            ChainInput::Wav(b) => self.transcribe_wav(b)?,
            ChainInput::Lattice(b) => self.transcribe_lattice(b)?,
        };
        let hyphenated = if self.skips_hyphen(&transcription) {
            None
        } else {
            Some(self.correct_hyphen(&transcription)?)
        };
        let after_hyphen = hyphenated.as_ref().map_or(transcription.as_str(), |c| c.text.as_str());
        let unknown = self.correct_unknown(after_hyphen)?;
        Ok(ChainOutput {
            transcription,
            hyphen: hyphenated,
            unknown,
        })
    }
}

fn check_size(text: &str) -> Result<(), ServiceError> {
    if text.len() > MAX_TEXT_BYTES {
        Err(ServiceError::TooLarge { limit: MAX_TEXT_BYTES })
    } else {
        Ok(())
    }
}

/// The skip rule: with a positive threshold, transcriptions of at most that
/// many words bypass hyphen and capitalization correction.
pub fn skips_hyphen(threshold: usize, transcription: &str) -> bool {
    threshold > 0 && transcription.split_whitespace().count() <= threshold
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainInput {
    Wav(Vec<u8>),
    Lattice(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainOutput {
    pub transcription: String,
    /// `None` when the skip rule bypassed the hyphen stage.
    pub hyphen: Option<Correction>,
    pub unknown: Correction,
}

impl ChainOutput {
    pub fn text(&self) -> &str {
        &self.unknown.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctcfuse::audio::wav_bytes;
    use ctcfuse::synth_lattice;

    fn toy() -> Models {
        let mut counts = CountTable::new();
        for (line, n) in [("s-a dus acasa", 30), ("sa dus", 1), ("sa carte", 25), ("mere verzi maria", 12)] {
            for _ in 0..n {
                counts.add_line(&line.split(' ').collect::<Vec<_>>());
            }
        }
        let vocab = Vocabulary::from_counts(&counts, 1);
        Models::new(Alphabet::romanian(), None, FusionParams::no_lm(16), counts, vocab, NameList::parse("Maria\n"))
    }

    #[test]
    fn hyphen_example() {
        let c = toy().correct_hyphen("sa dus acasa").unwrap();
        assert_eq!(c.text, "s-a dus acasa");
        assert_eq!(c.comments, ["sa→s-a (bigram)"]);
    }

    #[test]
    fn capitalization_is_commented() {
        let c = toy().correct_hyphen("mere maria").unwrap();
        assert_eq!(c.text, "mere Maria");
        assert_eq!(c.comments, ["maria→Maria (capitalization)"]);
    }

    #[test]
    fn unknown_keeps_original_casing() {
        let m = toy();
        let c = m.correct_unknown("mere Maria").unwrap();
        assert_eq!(c.text, "mere Maria");
        assert!(c.comments.is_empty());
        let c = m.correct_unknown("mene verzi").unwrap();
        assert_eq!(c.text, "mere verzi");
        assert_eq!(c.comments.len(), 1);
    }

    #[test]
    fn oversized_text() {
        let big = "a".repeat(MAX_TEXT_BYTES + 1);
        assert_eq!(toy().correct_hyphen(&big), Err(ServiceError::TooLarge { limit: MAX_TEXT_BYTES }));
    }

    #[test]
    fn registry_lookup() {
        let a = Alphabet::romanian();
        let samples: Vec<i16> = (0..4000).map(|i| (i % 97) as i16).collect();
        let wav = wav_bytes(&samples, 16_000, 1, 16);
        let pcm = parse_wav(&wav).unwrap().pcm_bytes();
        let mut reg = Registry::default();
        reg.insert(&pcm, synth_lattice("salut", &a, 2, 0.1, 4).unwrap());
        let m = toy().with_registry(reg);
        assert_eq!(m.transcribe_wav(&wav).unwrap(), "salut");
        let other = wav_bytes(&samples[1..], 16_000, 1, 16);
        assert_eq!(
            m.transcribe_wav(&other),
            Err(ServiceError::BadRequest("no lattice registered for input".into()))
        );
        let wrong_rate = wav_bytes(&samples, 44_100, 1, 16);
        assert!(matches!(m.transcribe_wav(&wrong_rate), Err(ServiceError::BadRequest(msg)) if msg.contains("sample rate")));
    }

    #[test]
    fn skip_rule() {
        assert!(!skips_hyphen(0, "da"));
        assert!(skips_hyphen(2, "da"));
        assert!(skips_hyphen(2, "da nu"));
        assert!(!skips_hyphen(2, "da nu da"));
        assert!(skips_hyphen(1, ""));
    }
}
