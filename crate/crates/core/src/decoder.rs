//! Greedy and prefix beam-search CTC decoding with n-gram shallow fusion.
//!
//! During the search the LM weight and the word bonus are added each time a
//! space completes a word. The surviving hypotheses are then ranked by
//! [`score_eq1`], so a reported `q_score` is always reproducible from the
//! result's own fields.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::LN_10;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::lattice::{LatticeError, LogitLattice};
use crate::lm::{LmState, NGramModel};

/// Lattice entries at or below this are treated as impossible.
const SKIP_BELOW: f64 = -1e8;

/// Largest `V^T` the exhaustive decoder accepts by default.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("invalid fusion parameters: {0}")]
    InvalidParams(String),
    #[error("use_lm is set but no language model was supplied")]
    MissingLm,
    #[error("exhaustive decoding needs {alignments} alignments, limit is {limit}")]
    TooLarge { alignments: f64, limit: u64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub alpha: f64,
    pub beta: f64,
    pub beam_width: usize,
    pub use_lm: bool,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 1.5,
            beam_width: 128,
            use_lm: true,
        }
    }
}

impl FusionParams {
    pub fn no_lm(beam_width: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            beam_width,
            use_lm: false,
        }
    }

    pub fn with_weights(self, alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, ..self }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_width == 0 {
            return Err(DecodeError::InvalidParams("beam_width must be at least 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(DecodeError::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// `(alpha, beta)` as they enter the objective; both are zero without an LM.
    fn weights(&self) -> (f64, f64) {
        if self.use_lm {
            (self.alpha, self.beta)
        } else {
            (0.0, 0.0)
        }
    }

    /// The LM only has to be queried when its weight is nonzero.
    fn lm_active(&self) -> bool {
        self.use_lm && self.alpha != 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub transcription: String,
    /// Natural log. For beam search this is the prefix marginal; for greedy
    /// decoding it is the score of the single best alignment.
    pub log_pctc: f64,
    /// Natural-log LM score of the word sequence, 0 when the LM is not used.
    pub lm_log: f64,
    pub word_count: usize,
    pub q_score: f64,
}

pub fn word_count(transcription: &str) -> usize {
    transcription.split_whitespace().count()
}

/// Natural-log LM probability of the words of `transcription`, including the
/// sentence end. An empty transcription scores 0.
pub fn lm_log_score(lm: &NGramModel, transcription: &str) -> f64 {
    let words: Vec<&str> = transcription.split_whitespace().collect();
    if words.is_empty() {
        0.0
    } else {
        lm.score_sequence(&words) * LN_10
    }
}

fn eq1(log_pctc: f64, lm_log: f64, word_count: usize, params: &FusionParams) -> f64 {
    let (alpha, beta) = params.weights();
    log_pctc + alpha * lm_log + beta * word_count as f64
}

/// `Q(y)` for a transcription with known `ln p_ctc`.
pub fn score_eq1(log_pctc: f64, transcription: &str, lm: Option<&NGramModel>, params: &FusionParams) -> f64 {
    let lm_log = match lm {
        Some(lm) if params.lm_active() => lm_log_score(lm, transcription),
        _ => 0.0,
    };
    eq1(log_pctc, lm_log, word_count(transcription), params)
}

/// Builds a full result for `transcription`, filling the LM fields the same
/// way [`score_eq1`] does.
pub fn rescore(log_pctc: f64, transcription: String, lm: Option<&NGramModel>, params: &FusionParams) -> DecodeResult {
    let lm_log = match lm {
        Some(lm) if params.lm_active() => lm_log_score(lm, &transcription),
        _ => 0.0,
    };
    let word_count = word_count(&transcription);
    DecodeResult {
        q_score: eq1(log_pctc, lm_log, word_count, params),
        transcription,
        log_pctc,
        lm_log,
        word_count,
    }
}

/// Per-frame argmax, collapsed. Ties go to the lowest symbol index.
pub fn greedy_decode(lattice: &LogitLattice) -> DecodeResult {
    let mut path = Vec::with_capacity(lattice.frames());
    let mut score = 0.0;
    let mut row = Vec::with_capacity(lattice.symbols());
    for raw in lattice.rows() {
        normalize_into(raw, &mut row);
        let (best, v) = row
            .iter()
            .enumerate()
            .fold((0, row[0]), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        path.push(best);
        score += v;
    }
    let alphabet = lattice.alphabet();
    let transcription = alphabet
        .decode_text(&alphabet.collapse(&path))
        .expect("collapsed labels are valid");
    let word_count = word_count(&transcription);
    DecodeResult {
        transcription,
        log_pctc: score,
        lm_log: 0.0,
        word_count,
        q_score: score,
    }
}

/// Exact `p_ctc` of every reachable transcription by enumerating all
/// `V^T` alignments, sorted by probability (descending) then text.
pub fn brute_force_decode(lattice: &LogitLattice, limit: u64) -> Result<Vec<(String, f64)>, DecodeError> {
    let (t, v) = (lattice.frames(), lattice.symbols());
    let alignments = (v as f64).powi(t as i32);
    if alignments > limit as f64 {
        return Err(DecodeError::TooLarge { alignments, limit });
    }
    let blank = lattice.alphabet().blank();
    let mut totals: HashMap<Vec<usize>, f64> = HashMap::new();
    let rows: Vec<Vec<f64>> = (0..t).map(|i| normalized_row(lattice.row(i))).collect();
    let mut out = Vec::with_capacity(t);
    enumerate(&rows, blank, 0, None, 0.0, &mut out, &mut totals);
    let alphabet = lattice.alphabet();
    let mut list: Vec<(String, f64)> = totals
        .into_iter()
        .map(|(labels, p)| (alphabet.decode_text(&labels).expect("collapsed labels are valid"), p))
        .collect();
    list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(list)
}

fn enumerate(
    rows: &[Vec<f64>],
    blank: usize,
    t: usize,
    prev: Option<usize>,
    logp: f64,
    out: &mut Vec<usize>,
    totals: &mut HashMap<Vec<usize>, f64>,
) {
    if t == rows.len() {
        *totals.entry(out.clone()).or_default() += logp.exp();
        return;
    }
    for (s, &lp) in rows[t].iter().enumerate() {
        if lp <= SKIP_BELOW {
            continue;
        }
        let emits = s != blank && Some(s) != prev;
        if emits {
            out.push(s);
        }
        enumerate(rows, blank, t + 1, Some(s), logp + lp, out, totals);
        if emits {
            out.pop();
        }
    }
}

/// A lattice row in f64, shifted so that it sums to exactly one. Rows are
/// stored as f32, whose rounding alone leaves them off by about 1e-7.
fn normalized_row(row: &[f32]) -> Vec<f64> {
    let mut out = Vec::with_capacity(row.len());
    normalize_into(row, &mut out);
    out
}

fn normalize_into(row: &[f32], out: &mut Vec<f64>) {
    out.clear();
    out.extend(row.iter().map(|&v| v as f64));
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = max + out.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    for v in out.iter_mut() {
        if *v > SKIP_BELOW {
            *v -= norm;
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

const ROOT: u32 = 0;
const NO_PARENT: u32 = u32::MAX;

/// A prefix is identified by its parent node and last label.
type Key = (u32, u32);

struct Node {
    key: Key,
    /// Natural-log LM score of the completed words.
    lm_acc: f64,
    words: u32,
    state: LmState,
    /// LM score and state if a space were appended now, filled on demand.
    on_space: Option<(f64, LmState)>,
}

struct Trie<'a> {
    nodes: Vec<Node>,
    index: FxHashMap<Key, u32>,
    lattice: &'a LogitLattice,
    space: Option<u32>,
    lm: Option<&'a NGramModel>,
    scratch: (Vec<char>, String),
}

impl<'a> Trie<'a> {
    fn new(lattice: &'a LogitLattice, lm: Option<&'a NGramModel>) -> Self {
        let state = lm.map_or(LmState::empty(), LmState::sentence_start);
        let root = Node {
            key: (NO_PARENT, NO_PARENT),
            lm_acc: 0.0,
            words: 0,
            state,
            on_space: None,
        };
        let mut index = FxHashMap::default();
        index.insert(root.key, ROOT);
        Self {
            nodes: vec![root],
            index,
            lattice,
            space: lattice.alphabet().space().map(|s| s as u32),
            lm,
            scratch: Default::default(),
        }
    }

    fn last_label(&self, node: u32) -> Option<u32> {
        (node != ROOT).then(|| self.nodes[node as usize].key.1)
    }

    fn labels(&self, key: Key) -> Vec<u32> {
        let mut out = Vec::new();
        let (mut node, last) = match self.index.get(&key) {
            Some(&n) => (n, None),
            None => (key.0, Some(key.1)),
        };
        while node != ROOT {
            let k = self.nodes[node as usize].key;
            out.push(k.1);
            node = k.0;
        }
        out.reverse();
        out.extend(last);
        out
    }

    fn text(&self, node: u32) -> String {
        let alphabet = self.lattice.alphabet();
        self.labels(self.nodes[node as usize].key)
            .into_iter()
            .map(|l| alphabet.label(l as usize).expect("label in range"))
            .collect()
    }

    /// Writes the word that a space appended to `node` would complete.
    fn open_word(&self, mut node: u32, chars: &mut Vec<char>, word: &mut String) {
        let alphabet = self.lattice.alphabet();
        chars.clear();
        while node != ROOT {
            let (parent, label) = self.nodes[node as usize].key;
            if Some(label) == self.space {
                break;
            }
            chars.push(alphabet.label(label as usize).expect("label in range"));
            node = parent;
        }
        word.clear();
        word.extend(chars.iter().rev());
    }

    /// `(lm_acc, words, state)` of the prefix `key`, whether or not it has a
    /// node yet.
    fn attrs(&mut self, key: Key) -> (f64, u32, LmState) {
        if let Some(&n) = self.index.get(&key) {
            let node = &self.nodes[n as usize];
            return (node.lm_acc, node.words, node.state);
        }
        self.extension(key.0, key.1)
    }

    /// Attributes of `parent` extended by `label`.
    fn extension(&mut self, parent: u32, label: u32) -> (f64, u32, LmState) {
        let p = &self.nodes[parent as usize];
        let base = (p.lm_acc, p.words, p.state);
        if Some(label) != self.space {
            return base;
        }
        if let Some((lp, state)) = p.on_space {
            return (base.0 + lp, base.1 + 1, state);
        }
        let (mut chars, mut word) = std::mem::take(&mut self.scratch);
        self.open_word(parent, &mut chars, &mut word);
        let empty = word.is_empty();
        let scored = self.lm.filter(|_| !empty).map(|lm| lm.incremental_score_str(&base.2, &word));
        self.scratch = (chars, word);
        if empty {
            return base;
        }
        let (lp, state) = scored.map_or((0.0, base.2), |(lp, state)| (lp * LN_10, state));
        self.nodes[parent as usize].on_space = Some((lp, state));
        (base.0 + lp, base.1 + 1, state)
    }

    fn materialize(&mut self, key: Key) -> u32 {
        if let Some(&n) = self.index.get(&key) {
            return n;
        }
        let (lm_acc, words, state) = self.attrs(key);
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            key,
            lm_acc,
            words,
            state,
            on_space: None,
        });
        self.index.insert(key, id);
        id
    }
}

struct Hyp {
    node: u32,
    pb: f64,
    pnb: f64,
}

struct Candidate {
    key: Key,
    /// Set when the prefix is already in the beam.
    node: Option<u32>,
    pb: f64,
    pnb: f64,
    score: f64,
}

/// Prefix beam search with shallow fusion. Returns up to `n_best` results
/// ordered by `q_score`, ties broken by transcription.
pub fn beam_decode(
    lattice: &LogitLattice,
    params: &FusionParams,
    lm: Option<&NGramModel>,
    n_best: usize,
) -> Result<Vec<DecodeResult>, DecodeError> {
    params.validate()?;
    if params.use_lm && lm.is_none() {
        return Err(DecodeError::MissingLm);
    }
    let (alpha, beta) = params.weights();
    let search_lm = if params.lm_active() { lm } else { None };
    let mut trie = Trie::new(lattice, search_lm);
    let blank = lattice.alphabet().blank();

    let v = lattice.symbols();
    let mut beam: Vec<Hyp> = vec![Hyp {
        node: ROOT,
        pb: 0.0,
        pnb: f64::NEG_INFINITY,
    }];
    let mut cands: Vec<Candidate> = Vec::new();
    // child_slot[i * v + s] = 1 + beam slot of beam[i] extended by s, if that
    // prefix is itself in the beam
    let mut child_slot: Vec<u32> = Vec::new();
    let mut slot_of: FxHashMap<u32, u32> = FxHashMap::default();

    let mut row = Vec::with_capacity(v);
    for raw in lattice.rows() {
        normalize_into(raw, &mut row);
        let lp_blank = row[blank];

        cands.clear();
        slot_of.clear();
        for (i, h) in beam.iter().enumerate() {
            slot_of.insert(h.node, i as u32);
            let last = trie.last_label(h.node);
            let pnb = match last {
                Some(l) if row[l as usize] > SKIP_BELOW => h.pnb + row[l as usize],
                _ => f64::NEG_INFINITY,
            };
            let pb = if lp_blank > SKIP_BELOW {
                log_add(h.pb, h.pnb) + lp_blank
            } else {
                f64::NEG_INFINITY
            };
            cands.push(Candidate {
                key: trie.nodes[h.node as usize].key,
                node: Some(h.node),
                pb,
                pnb,
                score: 0.0,
            });
        }
        child_slot.clear();
        child_slot.resize(beam.len() * v, 0);
        for (i, h) in beam.iter().enumerate() {
            let (parent, label) = trie.nodes[h.node as usize].key;
            if let Some(&p) = slot_of.get(&parent) {
                child_slot[p as usize * v + label as usize] = i as u32 + 1;
            }
        }

        for (i, h) in beam.iter().enumerate() {
            let total = log_add(h.pb, h.pnb);
            let last = trie.last_label(h.node);
            for (s, &lp) in row.iter().enumerate() {
                if s == blank || lp <= SKIP_BELOW {
                    continue;
                }
                let s = s as u32;
                let contribution = if Some(s) == last { h.pb + lp } else { total + lp };
                match child_slot[i * v + s as usize] {
                    0 => cands.push(Candidate {
                        key: (h.node, s),
                        node: None,
                        pb: f64::NEG_INFINITY,
                        pnb: contribution,
                        score: 0.0,
                    }),
                    c => {
                        let own = &mut cands[c as usize - 1];
                        own.pnb = log_add(own.pnb, contribution);
                    }
                }
            }
        }

        for c in cands.iter_mut() {
            let (lm_acc, words) = match c.node {
                Some(n) => {
                    let node = &trie.nodes[n as usize];
                    (node.lm_acc, node.words)
                }
                None => {
                    let (lm_acc, words, _) = trie.extension(c.key.0, c.key.1);
                    (lm_acc, words)
                }
            };
            c.score = log_add(c.pb, c.pnb) + alpha * lm_acc + beta * words as f64;
        }
        cands.retain(|c| c.score > f64::NEG_INFINITY);
        let order = |a: &Candidate, b: &Candidate| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| trie.labels(a.key).cmp(&trie.labels(b.key)))
        };
        if cands.len() > params.beam_width {
            cands.select_nth_unstable_by(params.beam_width - 1, order);
            cands.truncate(params.beam_width);
        }
        cands.sort_unstable_by(order);
        beam.clear();
        for c in &cands {
            let node = match c.node {
                Some(n) => n,
                None => trie.materialize(c.key),
            };
            beam.push(Hyp {
                node,
                pb: c.pb,
                pnb: c.pnb,
            });
        }
    }

    let lm = if params.use_lm { lm } else { None };
    let mut results: Vec<DecodeResult> = beam
        .iter()
        .map(|h| rescore(log_add(h.pb, h.pnb), trie.text(h.node), lm, params))
        .collect();
    results.sort_by(ranking);
    results.truncate(n_best);
    Ok(results)
}

/// Best first: `q_score` descending, then transcription ascending.
pub fn ranking(a: &DecodeResult, b: &DecodeResult) -> Ordering {
    b.q_score
        .total_cmp(&a.q_score)
        .then_with(|| a.transcription.cmp(&b.transcription))
}
