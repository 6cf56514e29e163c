//! Word edit distance by memoized recursion over suffixes, a different
//! formulation from the library's forward table.

use std::collections::HashMap;

fn dist<'a>(r: &[&'a str], h: &[&'a str], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if r.is_empty() {
        return h.len();
    }
    if h.is_empty() {
        return r.len();
    }
    let key = (r.len(), h.len());
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let d = if r[0] == h[0] {
        dist(&r[1..], &h[1..], memo)
    } else {
        1 + dist(&r[1..], &h[1..], memo)
            .min(dist(&r[1..], h, memo))
            .min(dist(r, &h[1..], memo))
    };
    memo.insert(key, d);
    d
}

pub fn edit_distance(reference: &str, hypothesis: &str) -> usize {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    dist(&r, &h, &mut HashMap::new())
}

/// Corpus WER in percent: total edits over total reference words.
pub fn corpus_wer(pairs: &[(String, String)]) -> f64 {
    let edits: usize = pairs.iter().map(|(r, h)| edit_distance(r, h)).sum();
    let words: usize = pairs.iter().map(|(r, _)| r.split_whitespace().count()).sum();
    100.0 * edits as f64 / words as f64
}
