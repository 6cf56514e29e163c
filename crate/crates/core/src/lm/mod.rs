//! Back-off n-gram language model (orders 1 to 5).
//!
//! Probabilities are stored as log10 values with ARPA semantics: if
//! `h w` is in the table its stored value is the answer, otherwise the answer
//! is `backoff(h) + log p(w | h[1..])`, where a missing `backoff(h)` counts as
//! zero. Models come from [`train`] (interpolated modified Kneser-Ney) or
//! from ARPA text via [`load_arpa`]. Both paths produce the same tables, so
//! queries never depend on where a model came from.

mod arpa;
mod train;

use rustc_hash::FxHashMap;
use thiserror::Error;

pub use arpa::{load_arpa, load_arpa_file, save_arpa};
pub use train::{train, TrainConfig, TrainReport};

pub const MAX_ORDER: usize = 5;
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// log10 probability written for `<s>`, which is never predicted.
pub const BOS_LOG10: f64 = -99.0;

pub type WordId = u32;
const PAD: WordId = WordId::MAX;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("order {0} is outside 1..={MAX_ORDER}")]
    BadOrder(usize),
    #[error("malformed ARPA header: {0}")]
    MalformedHeader(String),
    #[error("ARPA line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("ARPA order {order}: header declares {declared} n-grams, section lists {actual}")]
    CountMismatch {
        order: usize,
        declared: usize,
        actual: usize,
    },
    #[error("n-gram {ngram:?} has no context entry to carry its back-off weight")]
    MissingBackoff { ngram: String },
    #[error("n-gram {ngram:?} has no lower-order suffix entry")]
    MissingSuffix { ngram: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct NgramKey([WordId; MAX_ORDER]);

impl NgramKey {
    pub(crate) fn new(ids: &[WordId]) -> Self {
        let mut k = [PAD; MAX_ORDER];
        k[..ids.len()].copy_from_slice(ids);
        Self(k)
    }

    fn with_last(ctx: &[WordId], w: WordId) -> Self {
        let mut k = [PAD; MAX_ORDER];
        k[..ctx.len()].copy_from_slice(ctx);
        k[ctx.len()] = w;
        Self(k)
    }

    pub(crate) fn ids(&self, n: usize) -> &[WordId] {
        &self.0[..n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub log10_prob: f64,
    pub log10_backoff: f64,
}

/// Immutable back-off model; share it freely between threads.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    words: Vec<String>,
    ids: FxHashMap<String, WordId>,
    // tables[n - 1] holds the n-grams
    tables: Vec<FxHashMap<NgramKey, Entry>>,
    bos: WordId,
    eos: WordId,
    unk: WordId,
}

impl NGramModel {
    /// Empty model with the three sentinels registered. Tables are filled by
    /// the trainer or the ARPA reader.
    pub(crate) fn with_order(order: usize) -> Result<Self, LmError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(LmError::BadOrder(order));
        }
        let mut m = Self {
            order,
            words: Vec::new(),
            ids: FxHashMap::default(),
            tables: vec![FxHashMap::default(); order],
            bos: 0,
            eos: 0,
            unk: 0,
        };
        m.bos = m.intern(BOS);
        m.eos = m.intern(EOS);
        m.unk = m.intern(UNK);
        Ok(m)
    }

    pub(crate) fn intern(&mut self, w: &str) -> WordId {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.words.push(w.to_owned());
        self.ids.insert(w.to_owned(), id);
        id
    }

    pub(crate) fn insert(&mut self, ids: &[WordId], entry: Entry) {
        self.tables[ids.len() - 1].insert(NgramKey::new(ids), entry);
    }

    pub(crate) fn get(&self, ids: &[WordId]) -> Option<&Entry> {
        self.tables.get(ids.len().wrapping_sub(1))?.get(&NgramKey::new(ids))
    }

    pub(crate) fn table(&self, n: usize) -> &FxHashMap<NgramKey, Entry> {
        &self.tables[n - 1]
    }

    pub(crate) fn table_mut(&mut self, n: usize) -> &mut FxHashMap<NgramKey, Entry> {
        &mut self.tables[n - 1]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bos(&self) -> WordId {
        self.bos
    }

    pub fn eos(&self) -> WordId {
        self.eos
    }

    pub fn unk(&self) -> WordId {
        self.unk
    }

    /// Number of n-grams of order `n`.
    pub fn ngram_count(&self, n: usize) -> usize {
        self.tables.get(n.wrapping_sub(1)).map_or(0, |t| t.len())
    }

    /// All word strings including sentinels, indexed by id.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    /// Word id; out-of-vocabulary words map to `<unk>`.
    pub fn id(&self, word: &str) -> WordId {
        self.ids.get(word).copied().unwrap_or(self.unk)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    /// Words that can be predicted: the whole vocabulary except `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = WordId> + '_ {
        (0..self.words.len() as WordId).filter(move |&w| w != self.bos)
    }

    /// log10 p(word | history) over word ids. Only the last `order - 1`
    /// history entries matter.
    pub fn cond_logprob_ids(&self, word: WordId, history: &[WordId]) -> f64 {
        let keep = history.len().min(self.order - 1);
        let mut ctx = &history[history.len() - keep..];
        let mut backoff = 0.0;
        loop {
            let table = &self.tables[ctx.len()];
            if let Some(e) = table.get(&NgramKey::with_last(ctx, word)) {
                return backoff + e.log10_prob;
            }
            if ctx.is_empty() {
                // only reachable for ids the model has never seen
                return backoff + self.tables[0][&NgramKey::new(&[self.unk])].log10_prob;
            }
            if let Some(e) = self.tables[ctx.len() - 1].get(&NgramKey::new(ctx)) {
                backoff += e.log10_backoff;
            }
            ctx = &ctx[1..];
        }
    }

    /// log10 p(word | history) with string words; OOV maps to `<unk>`.
    pub fn cond_logprob(&self, word: &str, history: &[&str]) -> f64 {
        let mut ids = [PAD; MAX_ORDER];
        let keep = history.len().min(self.order - 1);
        for (slot, w) in ids.iter_mut().zip(&history[history.len() - keep..]) {
            *slot = self.id(w);
        }
        self.cond_logprob_ids(self.id(word), &ids[..keep])
    }

    /// log10 probability of a whole sentence: `<s>` context, each word, then `</s>`.
    pub fn score_sequence<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let mut state = LmState::sentence_start(self);
        let mut total = 0.0;
        for w in words {
            let (lp, next) = self.incremental_score(&state, self.id(w.as_ref()));
            total += lp;
            state = next;
        }
        total + self.incremental_score(&state, self.eos).0
    }

    /// Scores `word` after `state` and returns the advanced state.
    pub fn incremental_score(&self, state: &LmState, word: WordId) -> (f64, LmState) {
        let lp = self.cond_logprob_ids(word, state.words());
        (lp, state.push(word, self.order))
    }

    /// Scores a word given as a string.
    pub fn incremental_score_str(&self, state: &LmState, word: &str) -> (f64, LmState) {
        self.incremental_score(state, self.id(word))
    }
}

/// The last `order - 1` words of a hypothesis. `Copy`, so cloning is free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LmState {
    words: [WordId; MAX_ORDER - 1],
    len: u8,
}

impl LmState {
    /// No context at all; the next word is scored by its unigram.
    pub fn empty() -> Self {
        Self {
            words: [PAD; MAX_ORDER - 1],
            len: 0,
        }
    }

    /// Context holding just `<s>` (truncated to nothing for unigram models).
    pub fn sentence_start(model: &NGramModel) -> Self {
        Self::empty().push(model.bos(), model.order())
    }

    pub fn words(&self) -> &[WordId] {
        &self.words[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends `word`, keeping at most `order - 1` words.
    pub fn push(&self, word: WordId, order: usize) -> Self {
        let cap = order.saturating_sub(1).min(MAX_ORDER - 1);
        if cap == 0 {
            return Self::empty();
        }
        let mut next = *self;
        if next.len() < cap {
            next.words[next.len()] = word;
            next.len += 1;
        } else {
            let n = next.len();
            next.words.copy_within(n + 1 - cap..n, 0);
            next.words[cap - 1] = word;
            next.len = cap as u8;
            next.words[cap..].fill(PAD);
        }
        next
    }
}

impl Default for LmState {
    fn default() -> Self {
        Self::empty()
    }
}
