//! Post-processing of decoded text: hyphen and capitalization restoration,
//! and replacement of out-of-vocabulary words.

mod hyphen;
mod unknown;

pub use hyphen::{build_inventory, capitalize, restore_hyphens, HyphenInventory, NameList};
pub use unknown::{correct_unknown, UnknownConfig, UnknownCorrector};

/// Output of a correction pass. `comments` has one entry per changed token,
/// formatted as `original→replacement (evidence)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corrected {
    pub tokens: Vec<String>,
    pub comments: Vec<String>,
}

impl Corrected {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Which counts decided a replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evidence {
    Bigram,
    Unigram,
}

impl Evidence {
    pub fn name(self) -> &'static str {
        match self {
            Evidence::Bigram => "bigram",
            Evidence::Unigram => "unigram",
        }
    }
}

pub(crate) fn comment(from: &str, to: &str, evidence: Evidence) -> String {
    format!("{from}→{to} ({})", evidence.name())
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
