//! Line cleaning for LM training text, token normalisation, and the
//! vocabulary / unigram-bigram count tables used by the correction modules.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

const DIACRITICS: &[char] = &['ă', 'â', 'î', 'ș', 'ț', 'Ă', 'Â', 'Î', 'Ș', 'Ț'];

const STRIP: &[char] = &[
    '.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '[', ']', '«', '»', '„', '“', '”', '‘', '’',
    '…',
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropRule {
    InvalidUtf8,
    TooShort,
    TooLong,
    NoDiacritics,
    Url,
    Digits,
}

impl DropRule {
    /// In the order rules are applied; a line is attributed to the first
    /// rule it violates.
    pub const ALL: [DropRule; 6] = [
        DropRule::InvalidUtf8,
        DropRule::TooShort,
        DropRule::TooLong,
        DropRule::Url,
        DropRule::NoDiacritics,
        DropRule::Digits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DropRule::InvalidUtf8 => "invalid_utf8",
            DropRule::TooShort => "too_short",
            DropRule::TooLong => "too_long",
            DropRule::NoDiacritics => "no_diacritics",
            DropRule::Url => "url",
            DropRule::Digits => "digits",
        }
    }
}

impl fmt::Display for DropRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps abbreviations (one or more whitespace-separated tokens) to expansions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbbreviationTable {
    entries: HashMap<Vec<String>, String>,
    max_tokens: usize,
}

impl AbbreviationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, abbreviation: &str, expansion: &str) {
        let key: Vec<String> = abbreviation.split_whitespace().map(str::to_owned).collect();
        if key.is_empty() {
            return;
        }
        self.max_tokens = self.max_tokens.max(key.len());
        self.entries.insert(key, expansion.to_owned());
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Two-column TSV, `#` comment lines and blank lines ignored.
    pub fn parse_tsv(text: &str) -> Result<Self, CorpusError> {
        let mut table = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (abbr, exp) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                path: "<abbreviations>".into(),
                line: i + 1,
                message: "expected `abbreviation<TAB>expansion`".into(),
            })?;
            table.insert(abbr, exp);
        }
        Ok(table)
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for AbbreviationTable {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut t = Self::new();
        for (a, e) in iter {
            t.insert(a, e);
        }
        t
    }
}

/// Whole-token, longest-match, case-sensitive replacement. Separators
/// between tokens are preserved.
pub fn expand_abbreviations(line: &str, table: &AbbreviationTable) -> String {
    if table.is_empty() {
        return line.to_owned();
    }
    let spans: Vec<(usize, usize)> = token_spans(line).collect();
    let mut out = String::with_capacity(line.len() + 16);
    let mut copied = 0;
    let mut i = 0;
    while i < spans.len() {
        let longest = (1..=table.max_tokens.min(spans.len() - i)).rev().find_map(|n| {
            let key: Vec<String> = spans[i..i + n]
                .iter()
                .map(|&(s, e)| line[s..e].to_owned())
                .collect();
            table.entries.get(&key).map(|exp| (n, exp))
        });
        match longest {
            Some((n, exp)) => {
                out.push_str(&line[copied..spans[i].0]);
                out.push_str(exp);
                copied = spans[i + n - 1].1;
                i += n;
            }
            None => i += 1,
        }
    }
    out.push_str(&line[copied..]);
    out
}

fn token_spans(line: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut start = None;
    line.char_indices()
        .chain(std::iter::once((line.len(), ' ')))
        .filter_map(move |(i, c)| {
            if c.is_whitespace() {
                start.take().map(|s| (s, i))
            } else {
                if start.is_none() {
                    start = Some(i);
                }
                None
            }
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningConfig {
    pub min_line_chars: usize,
    pub max_line_chars: usize,
    pub drop_no_diacritics: bool,
    pub drop_urls: bool,
    pub drop_digit_lines: bool,
    pub abbreviations: AbbreviationTable,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            min_line_chars: 20,
            max_line_chars: 2000,
            drop_no_diacritics: true,
            drop_urls: true,
            drop_digit_lines: true,
            abbreviations: AbbreviationTable::new(),
        }
    }
}

impl CleaningConfig {
    /// Applies every rule to one line; returns the (abbreviation-expanded)
    /// line if it survives, or the first rule it violates.
    pub fn check(&self, line: &str) -> Result<String, DropRule> {
        let chars = line.chars().count();
        if chars < self.min_line_chars {
            return Err(DropRule::TooShort);
        }
        if chars > self.max_line_chars {
            return Err(DropRule::TooLong);
        }
        if self.drop_urls && line.split_whitespace().any(is_url) {
            return Err(DropRule::Url);
        }
        if self.drop_no_diacritics && !line.contains(DIACRITICS) {
            return Err(DropRule::NoDiacritics);
        }
        let expanded = expand_abbreviations(line, &self.abbreviations);
        if self.drop_digit_lines && expanded.chars().any(|c| c.is_ascii_digit()) {
            return Err(DropRule::Digits);
        }
        Ok(expanded)
    }
}

fn is_url(token: &str) -> bool {
    let t = token.to_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleanStats {
    pub total: u64,
    pub kept: u64,
    pub dropped: HashMap<DropRule, u64>,
}

impl CleanStats {
    pub fn dropped(&self, rule: DropRule) -> u64 {
        self.dropped.get(&rule).copied().unwrap_or(0)
    }

    fn record(&mut self, outcome: &Result<String, DropRule>) {
        self.total += 1;
        match outcome {
            Ok(_) => self.kept += 1,
            Err(rule) => *self.dropped.entry(*rule).or_default() += 1,
        }
    }
}

impl fmt::Display for CleanStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "total={} kept={}", self.total, self.kept)?;
        for rule in DropRule::ALL {
            write!(f, " {}={}", rule, self.dropped(rule))?;
        }
        Ok(())
    }
}

/// Cleans raw lines (bytes, so invalid UTF-8 can be counted rather than
/// aborting the stream). Returns the surviving lines in order.
pub fn clean_lines<I, L>(lines: I, config: &CleaningConfig) -> (Vec<String>, CleanStats)
where
    I: IntoIterator<Item = L>,
    L: AsRef<[u8]>,
{
    let mut stats = CleanStats::default();
    let mut kept = Vec::new();
    for line in lines {
        let outcome = match std::str::from_utf8(line.as_ref()) {
            Ok(s) => config.check(s.trim_end_matches(['\r', '\n'])),
            Err(_) => Err(DropRule::InvalidUtf8),
        };
        stats.record(&outcome);
        if let Ok(s) = outcome {
            kept.push(s);
        }
    }
    (kept, stats)
}

/// Streaming variant of [`clean_lines`]: reads `input` line by line and
/// writes surviving lines to `output`.
pub fn clean_stream<R: BufRead, W: Write>(
    mut input: R,
    mut output: W,
    config: &CleaningConfig,
) -> io::Result<CleanStats> {
    let mut stats = CleanStats::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let outcome = match std::str::from_utf8(&buf) {
            Ok(s) => config.check(s.trim_end_matches(['\r', '\n'])),
            Err(_) => Err(DropRule::InvalidUtf8),
        };
        stats.record(&outcome);
        if let Ok(s) = outcome {
            output.write_all(s.as_bytes())?;
            output.write_all(b"\n")?;
        }
    }
    output.flush()?;
    Ok(stats)
}

/// Lowercases, splits on whitespace and trims surrounding punctuation.
/// Hyphens are kept, so clitic forms like "s-a" survive.
pub fn normalize_tokens(line: &str) -> Vec<String> {
    line.split_whitespace()
        .map(|t| t.trim_matches(STRIP).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Normalises a single whitespace-free token; `None` when nothing is left.
pub fn normalize_token(token: &str) -> Option<String> {
    let t = token.trim_matches(STRIP).to_lowercase();
    (!t.is_empty()).then_some(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    counts: HashMap<String, u64>,
    min_count: u64,
}

pub const DEFAULT_MIN_COUNT: u64 = 10;

impl Vocabulary {
    pub fn new(counts: HashMap<String, u64>, min_count: u64) -> Self {
        let counts = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        Self { counts, min_count }
    }

    pub fn from_counts(table: &CountTable, min_count: u64) -> Self {
        Self::new(table.unigrams.clone(), min_count)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.count(word) >= self.min_count.max(1)
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn with_min_count(mut self, min_count: u64) -> Self {
        self.min_count = min_count;
        self
    }

    /// Words meeting the membership threshold, with counts.
    pub fn members(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts
            .iter()
            .filter(|(_, &c)| c >= self.min_count.max(1))
            .map(|(w, &c)| (w.as_str(), c))
    }

    pub fn all_counts(&self) -> &HashMap<String, u64> {
        &self.counts
    }

    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&String, &u64)> = self.counts.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        rows.iter().map(|(w, c)| format!("{w}\t{c}\n")).collect()
    }

    pub fn from_tsv(text: &str, min_count: u64) -> Result<Self, CorpusError> {
        let mut counts = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [w, c] => {
                    counts.insert((*w).to_owned(), parse_count(c, i)?);
                }
                _ => return Err(parse_err(i, "expected `word<TAB>count`")),
            }
        }
        Ok(Self::new(counts, min_count))
    }
}

pub fn build_vocab<I, S>(tokens: I, min_count: u64) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in tokens {
        let t = t.as_ref();
        match counts.get_mut(t) {
            Some(c) => *c += 1,
            None => {
                counts.insert(t.to_owned(), 1);
            }
        }
    }
    Vocabulary::new(counts, min_count)
}

fn parse_count(s: &str, line: usize) -> Result<u64, CorpusError> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, &format!("bad count {s:?}")))
}

fn parse_err(line: usize, message: &str) -> CorpusError {
    CorpusError::Parse {
        path: "<tsv>".into(),
        line: line + 1,
        message: message.into(),
    }
}

/// Unigram and within-line bigram counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    pub unigrams: HashMap<String, u64>,
    pub bigrams: HashMap<(String, String), u64>,
    pub total: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_line<S: AsRef<str>>(&mut self, tokens: &[S]) {
        for (i, t) in tokens.iter().enumerate() {
            *self.unigrams.entry(t.as_ref().to_owned()).or_default() += 1;
            self.total += 1;
            if let Some(next) = tokens.get(i + 1) {
                *self
                    .bigrams
                    .entry((t.as_ref().to_owned(), next.as_ref().to_owned()))
                    .or_default() += 1;
            }
        }
    }

    pub fn unigram(&self, w: &str) -> u64 {
        self.unigrams.get(w).copied().unwrap_or(0)
    }

    pub fn bigram(&self, w1: &str, w2: &str) -> u64 {
        // (String, String) keys cannot be borrowed as (&str, &str); this path
        // is only used off the hot loop.
        self.bigrams
            .get(&(w1.to_owned(), w2.to_owned()))
            .copied()
            .unwrap_or(0)
    }

    /// Adds another table's counts. Associative and commutative.
    pub fn merge(&mut self, other: CountTable) {
        for (w, c) in other.unigrams {
            *self.unigrams.entry(w).or_default() += c;
        }
        for (k, c) in other.bigrams {
            *self.bigrams.entry(k).or_default() += c;
        }
        self.total += other.total;
    }

    /// Unigram rows (`word TAB count`) then bigram rows (`w1 TAB w2 TAB count`),
    /// each sorted by descending count, then lexicographically.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let mut uni: Vec<_> = self.unigrams.iter().collect();
        uni.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (w, c) in uni {
            out.push_str(&format!("{w}\t{c}\n"));
        }
        let mut bi: Vec<_> = self.bigrams.iter().collect();
        bi.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for ((w1, w2), c) in bi {
            out.push_str(&format!("{w1}\t{w2}\t{c}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, CorpusError> {
        let mut t = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [w, c] => {
                    let c = parse_count(c, i)?;
                    t.unigrams.insert((*w).to_owned(), c);
                    t.total += c;
                }
                [w1, w2, c] => {
                    t.bigrams
                        .insert(((*w1).to_owned(), (*w2).to_owned()), parse_count(c, i)?);
                }
                _ => return Err(parse_err(i, "expected 2 or 3 tab-separated columns")),
            }
        }
        Ok(t)
    }
}

/// Counts over pre-tokenised lines; bigrams never cross line boundaries.
pub fn build_counts<I, L, S>(lines: I) -> CountTable
where
    I: IntoIterator<Item = L>,
    L: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut t = CountTable::new();
    for line in lines {
        t.add_line(line.as_ref());
    }
    t
}

/// Parallel [`build_counts`]; the result equals the sequential count exactly.
pub fn build_counts_par<S: AsRef<str> + Sync>(lines: &[Vec<S>]) -> CountTable {
    lines
        .par_iter()
        .fold(CountTable::new, |mut t, line| {
            t.add_line(line);
            t
        })
        .reduce(CountTable::new, |mut a, b| {
            a.merge(b);
            a
        })
}
