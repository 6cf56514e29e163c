use std::collections::{BTreeMap, HashMap};

use super::{comment, levenshtein, Corrected, Evidence};
use crate::corpus::{CountTable, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownConfig {
    /// Candidates need a distance strictly below `tau`, and the unigram
    /// fallback also needs a length difference strictly below it.
    pub tau: usize,
}

impl Default for UnknownConfig {
    fn default() -> Self {
        Self { tau: 3 }
    }
}

/// Replaces out-of-vocabulary tokens with close vocabulary words. Build it
/// once; the indexes are read-only afterwards.
#[derive(Debug, Clone)]
pub struct UnknownCorrector {
    vocab: Vocabulary,
    counts: CountTable,
    config: UnknownConfig,
    // next word -> vocabulary words seen right before it
    before: HashMap<String, Vec<String>>,
    // previous word -> vocabulary words seen right after it
    after: HashMap<String, Vec<String>>,
    // char length -> vocabulary words of that length, sorted
    by_len: BTreeMap<usize, Vec<String>>,
}

impl UnknownCorrector {
    pub fn new(vocab: Vocabulary, counts: CountTable, config: UnknownConfig) -> Self {
        let tau = config.tau.max(1);
        let mut before: HashMap<String, Vec<String>> = HashMap::new();
        let mut after: HashMap<String, Vec<String>> = HashMap::new();
        for ((w1, w2), &c) in &counts.bigrams {
            if c == 0 {
                continue;
            }
            if vocab.contains(w1) {
                before.entry(w2.clone()).or_default().push(w1.clone());
            }
            if vocab.contains(w2) {
                after.entry(w1.clone()).or_default().push(w2.clone());
            }
        }
        let mut by_len: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (w, _) in vocab.members() {
            by_len.entry(w.chars().count()).or_default().push(w.to_owned());
        }
        for list in before.values_mut().chain(after.values_mut()).chain(by_len.values_mut()) {
            list.sort_unstable();
        }
        Self {
            vocab,
            counts,
            config: UnknownConfig { tau },
            before,
            after,
            by_len,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    pub fn config(&self) -> UnknownConfig {
        self.config
    }

    /// Best bigram-supported replacement for `word` between `prev` and `next`.
    pub fn bigram_candidate(&self, word: &str, prev: Option<&str>, next: Option<&str>) -> Option<String> {
        let mut pool: Vec<&str> = Vec::new();
        if let Some(list) = next.and_then(|n| self.before.get(n)) {
            pool.extend(list.iter().map(String::as_str));
        }
        if let Some(list) = prev.and_then(|p| self.after.get(p)) {
            pool.extend(list.iter().map(String::as_str));
        }
        pool.sort_unstable();
        pool.dedup();
        pool.into_iter()
            .filter_map(|c| {
                let d = levenshtein(word, c);
                (d < self.config.tau).then(|| {
                    let support = next.map_or(0, |n| self.counts.bigram(c, n))
                        + prev.map_or(0, |p| self.counts.bigram(p, c));
                    (d, std::cmp::Reverse(support), c)
                })
            })
            .min()
            .map(|(_, _, c)| c.to_owned())
    }

    /// Best replacement by distance and frequency alone.
    pub fn unigram_candidate(&self, word: &str) -> Option<String> {
        let len = word.chars().count();
        let lo = len.saturating_sub(self.config.tau - 1);
        self.by_len
            .range(lo..len + self.config.tau)
            .flat_map(|(_, words)| words)
            .filter_map(|c| {
                let d = levenshtein(word, c);
                (d < self.config.tau).then(|| (d, std::cmp::Reverse(self.vocab.count(c)), c.as_str()))
            })
            .min()
            .map(|(_, _, c)| c.to_owned())
    }

    pub fn correct<S: AsRef<str>>(&self, tokens: &[S]) -> Corrected {
        let mut out = Corrected::default();
        for (k, token) in tokens.iter().enumerate() {
            let token = token.as_ref();
            if self.vocab.contains(token) {
                out.tokens.push(token.to_owned());
                continue;
            }
            let prev = k.checked_sub(1).map(|i| tokens[i].as_ref());
            let next = tokens.get(k + 1).map(AsRef::as_ref);
            let replacement = self
                .bigram_candidate(token, prev, next)
                .map(|c| (c, Evidence::Bigram))
                .or_else(|| self.unigram_candidate(token).map(|c| (c, Evidence::Unigram)));
            match replacement {
                Some((c, evidence)) => {
                    out.comments.push(comment(token, &c, evidence));
                    out.tokens.push(c);
                }
                None => out.tokens.push(token.to_owned()),
            }
        }
        out
    }
}

/// One-shot form of [`UnknownCorrector::correct`].
pub fn correct_unknown<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, counts: &CountTable, config: UnknownConfig) -> Corrected {
    UnknownCorrector::new(vocab.clone(), counts.clone(), config).correct(tokens)
}
