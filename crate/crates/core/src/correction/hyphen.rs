use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{comment, Corrected, Evidence};
use crate::corpus::CountTable;

/// Dehyphenated form to the hyphenated spellings seen in a corpus,
/// e.g. `sa` to `{s-a}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HyphenInventory {
    forms: BTreeMap<String, BTreeSet<String>>,
}

impl HyphenInventory {
    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn insert(&mut self, hyphenated: &str) {
        let key: String = hyphenated.chars().filter(|&c| c != '-').collect::<String>().to_lowercase();
        if key.is_empty() || !hyphenated.contains('-') {
            return;
        }
        self.forms.entry(key).or_default().insert(hyphenated.to_owned());
    }

    pub fn variants(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.forms.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.forms.iter().map(|(k, v)| (k.as_str(), v))
    }
}

pub fn build_inventory(counts: &CountTable) -> HyphenInventory {
    let mut inv = HyphenInventory::default();
    for w in counts.unigrams.keys() {
        if w.contains('-') {
            inv.insert(w);
        }
    }
    inv
}

/// Picks the strictly best candidate; a tie at the top keeps `original`.
fn best_by<'a>(original: &'a str, candidates: &[&'a str], score: impl Fn(&str) -> u64) -> &'a str {
    let top = candidates.iter().map(|c| score(c)).max().unwrap_or(0);
    let mut winners = candidates.iter().filter(|c| score(c) == top);
    match (winners.next(), winners.next()) {
        (Some(w), None) => w,
        _ => original,
    }
}

/// Replaces each token by its best-supported hyphenated form. Evidence is
/// the bigram with the right neighbour when any candidate has one, the
/// unigram count otherwise.
pub fn restore_hyphens<S: AsRef<str>>(tokens: &[S], inventory: &HyphenInventory, counts: &CountTable) -> Corrected {
    let mut out = Corrected::default();
    for (k, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        let Some(variants) = inventory.variants(token) else {
            out.tokens.push(token.to_owned());
            continue;
        };
        let mut candidates: Vec<&str> = vec![token];
        candidates.extend(variants.iter().map(String::as_str).filter(|v| *v != token));
        let next = tokens.get(k + 1).map(AsRef::as_ref);
        let bigram_support = next.filter(|n| candidates.iter().any(|c| counts.bigram(c, n) > 0));
        let (chosen, evidence) = match bigram_support {
            Some(n) => (best_by(token, &candidates, |c| counts.bigram(c, n)), Evidence::Bigram),
            None => (best_by(token, &candidates, |c| counts.unigram(c)), Evidence::Unigram),
        };
        if chosen != token {
            out.comments.push(comment(token, chosen, evidence));
        }
        out.tokens.push(chosen.to_owned());
    }
    out
}

/// Lowercase single-token names: people, countries, large cities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameList {
    names: HashSet<String>,
}

impl NameList {
    /// One name per line; `#` starts a comment line. A line holding several
    /// words adds each word.
    pub fn parse(text: &str) -> Self {
        let mut list = Self::default();
        list.extend_from(text);
        list
    }

    pub fn extend_from(&mut self, text: &str) {
        for line in text.lines().map(str::trim) {
            if line.starts_with('#') {
                continue;
            }
            for w in line.split_whitespace() {
                self.names.insert(w.to_lowercase());
            }
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.names.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl<'a> FromIterator<&'a str> for NameList {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        Self {
            names: iter.into_iter().map(str::to_lowercase).collect(),
        }
    }
}

fn upper_first(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) if first.is_lowercase() => first.to_uppercase().chain(chars).collect(),
        _ => token.to_owned(),
    }
}

/// Uppercases the first letter of listed names, and of the first token when
/// `sentence_start` is set.
pub fn capitalize<S: AsRef<str>>(tokens: &[S], names: &NameList, sentence_start: bool) -> Vec<String> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let t = t.as_ref();
            if names.contains(t) || (sentence_start && i == 0) {
                upper_first(t)
            } else {
                t.to_owned()
            }
        })
        .collect()
}
