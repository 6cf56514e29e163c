//! Interpolated modified Kneser-Ney estimation, written out directly as a
//! back-off table.
//!
//! Adjusted counts: the highest order and n-grams starting with `<s>` keep
//! their raw counts, every other n-gram uses its number of distinct left
//! extensions. Per order, discounts come from the count-of-counts `t1..t4`
//! of the adjusted counts:
//!
//! ```text
//! Y  = t1 / (t1 + 2 t2)
//! Dk = k - (k + 1) Y t(k+1) / tk      k = 1, 2, 3 (D3 applies to counts >= 3)
//! ```
//!
//! and fall back to 0.75 when they are undefined or not positive. The
//! unigram level interpolates with a uniform distribution over every
//! predictable word (including `<unk>` and `</s>`).

use std::collections::HashMap;

use rustc_hash::FxHashMap;

use super::{Entry, LmError, NGramModel, NgramKey, WordId, BOS, BOS_LOG10, EOS, MAX_ORDER};

pub const FALLBACK_DISCOUNT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    /// Words seen fewer than this many times become `<unk>`. 0 or 1 keeps all.
    pub unk_threshold: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            order: 5,
            unk_threshold: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// `[D1, D2, D3+]` per order, index 0 = unigrams.
    pub discounts: Vec<[f64; 3]>,
    /// Orders whose count-of-counts left a discount undefined; those use
    /// [`FALLBACK_DISCOUNT`] for all three.
    pub degenerate_orders: Vec<usize>,
    pub sentences: usize,
    pub tokens: usize,
}

/// Discounts from count-of-counts, or `None` when any is undefined or
/// non-positive.
pub fn modified_kn_discounts(t: [u64; 4]) -> Option<[f64; 3]> {
    let [t1, t2, t3, t4] = t.map(|x| x as f64);
    if t1 == 0.0 || t2 == 0.0 || t3 == 0.0 {
        return None;
    }
    let y = t1 / (t1 + 2.0 * t2);
    let d = [
        1.0 - 2.0 * y * t2 / t1,
        2.0 - 3.0 * y * t3 / t2,
        3.0 - 4.0 * y * t4 / t3,
    ];
    d.iter().all(|&x| x > 0.0).then_some(d)
}

fn discount(d: &[f64; 3], count: u64) -> f64 {
    match count {
        0 => 0.0,
        1 => d[0],
        2 => d[1],
        _ => d[2],
    }
}

/// Trains a model on tokenised lines; each line is one sentence wrapped in
/// `<s> ... </s>`. Empty lines are ignored.
pub fn train<L, S>(lines: &[L], config: &TrainConfig) -> Result<(NGramModel, TrainReport), LmError>
where
    L: AsRef<[S]>,
    S: AsRef<str>,
{
    let order = config.order;
    let mut model = NGramModel::with_order(order)?;
    let (bos, eos, unk) = (model.bos(), model.eos(), model.unk());

    let mut raw_words: HashMap<&str, u64> = HashMap::new();
    for line in lines {
        for w in line.as_ref() {
            *raw_words.entry(w.as_ref()).or_default() += 1;
        }
    }
    if raw_words.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let mut kept: Vec<&str> = raw_words
        .iter()
        .filter(|(w, &c)| c >= config.unk_threshold && ![BOS, EOS].contains(w))
        .map(|(w, _)| *w)
        .collect();
    kept.sort_unstable();
    for w in kept {
        model.intern(w);
    }

    let sentences: Vec<Vec<WordId>> = lines
        .iter()
        .map(AsRef::as_ref)
        .filter(|l| !l.is_empty())
        .map(|l| {
            std::iter::once(bos)
                .chain(l.iter().map(|w| model.ids.get(w.as_ref()).copied().unwrap_or(unk)))
                .chain(std::iter::once(eos))
                .collect()
        })
        .collect();
    let mut report = TrainReport {
        sentences: sentences.len(),
        tokens: sentences.iter().map(|s| s.len() - 2).sum(),
        ..Default::default()
    };

    // raw[n - 1]: counts of every n-gram occurrence
    let mut raw: Vec<FxHashMap<NgramKey, u64>> = vec![FxHashMap::default(); order];
    for s in &sentences {
        for n in 1..=order {
            for g in s.windows(n) {
                *raw[n - 1].entry(NgramKey::new(g)).or_default() += 1;
            }
        }
    }
    raw[0].remove(&NgramKey::new(&[bos]));

    // adjusted[n - 1]
    let mut adjusted: Vec<FxHashMap<NgramKey, u64>> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut a: FxHashMap<NgramKey, u64> = FxHashMap::default();
        if n == order {
            a = raw[n - 1].clone();
        } else {
            for (k, &c) in &raw[n - 1] {
                if k.ids(n)[0] == bos {
                    a.insert(*k, c);
                }
            }
            for k in raw[n].keys() {
                let suffix = &k.ids(n + 1)[1..];
                *a.entry(NgramKey::new(suffix)).or_default() += 1;
            }
        }
        adjusted.push(a);
    }

    for (i, a) in adjusted.iter().enumerate() {
        let mut t = [0u64; 4];
        for &c in a.values() {
            if (1..=4).contains(&c) {
                t[c as usize - 1] += 1;
            }
        }
        let d = match modified_kn_discounts(t) {
            Some(d) => d,
            None => {
                report.degenerate_orders.push(i + 1);
                [FALLBACK_DISCOUNT; 3]
            }
        };
        report.discounts.push(d);
    }

    // Per-context totals and the interpolation weight gamma(h).
    let mut gammas: Vec<FxHashMap<NgramKey, (f64, f64)>> = Vec::with_capacity(order);
    for (i, a) in adjusted.iter().enumerate() {
        let n = i + 1;
        let d = &report.discounts[i];
        let mut ctx: FxHashMap<NgramKey, (f64, f64)> = FxHashMap::default();
        for (k, &c) in a {
            let e = ctx.entry(NgramKey::new(&k.ids(n)[..n - 1])).or_default();
            e.0 += c as f64;
            e.1 += discount(d, c);
        }
        gammas.push(ctx);
    }

    // Unigrams: discounted mass plus a uniform share of the left-over mass.
    let vocab_size = (model.words.len() - 1) as f64;
    let (total, held) = gammas[0][&NgramKey::new(&[])];
    let uniform = held / total / vocab_size;
    for w in 0..model.words.len() as WordId {
        let log10_prob = if w == bos {
            BOS_LOG10
        } else {
            let c = adjusted[0].get(&NgramKey::new(&[w])).copied().unwrap_or(0);
            ((c as f64 - discount(&report.discounts[0], c)) / total + uniform).log10()
        };
        model.insert(&[w], Entry { log10_prob, log10_backoff: 0.0 });
    }

    for n in 2..=order {
        let d = report.discounts[n - 1];
        let mut keys: Vec<(NgramKey, u64)> = adjusted[n - 1].iter().map(|(k, &c)| (*k, c)).collect();
        // deterministic insertion order
        keys.sort_unstable_by_key(|k| k.0 .0);
        let mut rows = Vec::with_capacity(keys.len());
        for (k, c) in keys {
            let ids = k.ids(n);
            let (total, held) = gammas[n - 1][&NgramKey::new(&ids[..n - 1])];
            let lower = 10f64.powf(model.cond_logprob_ids(ids[n - 1], &ids[1..n - 1]));
            let p = (c as f64 - discount(&d, c)) / total + held / total * lower;
            rows.push((k, p.log10()));
        }
        for (k, log10_prob) in rows {
            model.table_mut(n).insert(k, Entry { log10_prob, log10_backoff: 0.0 });
        }
        // back-off weight of each context is its gamma
        for (ctx, &(total, held)) in &gammas[n - 1] {
            if let Some(e) = model.table_mut(n - 1).get_mut(ctx) {
                e.log10_backoff = if held > 0.0 { (held / total).log10() } else { 0.0 };
            }
        }
    }

    debug_assert!(order <= MAX_ORDER);
    Ok((model, report))
}
