//! Interpolated modified Kneser-Ney written out term by term: adjusted
//! counts by direct scans, discounts from count-of-counts, and a recursive
//! probability with a uniform base.

use std::collections::{BTreeSet, HashMap};

use ctcfuse::NGramModel;

pub const CORPORA: [(&str, usize); 3] = [
    (include_str!("../data/kn_three_lines.txt"), 3),
    (include_str!("../data/kn_repeats.txt"), 4),
    (include_str!("../data/kn_order5.txt"), 5),
];

pub fn lines(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_owned).collect())
        .filter(|l: &Vec<String>| !l.is_empty())
        .collect()
}

pub struct Oracle {
    pub order: usize,
    // adjusted[n - 1]: n-gram -> adjusted count
    adjusted: Vec<HashMap<Vec<String>, u64>>,
    discounts: Vec<[f64; 3]>,
    pub vocab: Vec<String>,
}

impl Oracle {
    pub fn new(corpus: &[Vec<String>], order: usize) -> Self {
        let sentences: Vec<Vec<String>> = corpus
            .iter()
            .map(|l| {
                let mut s = vec!["<s>".to_owned()];
                s.extend(l.iter().cloned());
                s.push("</s>".to_owned());
                s
            })
            .collect();
        let mut raw: Vec<HashMap<Vec<String>, u64>> = vec![HashMap::new(); order];
        for s in &sentences {
            for n in 1..=order {
                for i in 0..s.len().saturating_sub(n - 1) {
                    *raw[n - 1].entry(s[i..i + n].to_vec()).or_default() += 1;
                }
            }
        }
        raw[0].remove(&vec!["<s>".to_owned()]);

        let mut adjusted = Vec::new();
        for n in 1..=order {
            let mut a = HashMap::new();
            for g in raw[n - 1].keys() {
                let count = if n == order || g[0] == "<s>" {
                    raw[n - 1][g]
                } else {
                    // distinct words seen immediately left of g
                    raw[n].keys().filter(|longer| longer[1..] == g[..]).count() as u64
                };
                if count > 0 {
                    a.insert(g.clone(), count);
                }
            }
            adjusted.push(a);
        }

        let discounts = adjusted
            .iter()
            .map(|a| {
                let t = |k: u64| a.values().filter(|&&c| c == k).count() as f64;
                let (t1, t2, t3, t4) = (t(1), t(2), t(3), t(4));
                if t1 == 0.0 || t2 == 0.0 || t3 == 0.0 {
                    return [0.75; 3];
                }
                let y = t1 / (t1 + 2.0 * t2);
                let d = [1.0 - 2.0 * y * t2 / t1, 2.0 - 3.0 * y * t3 / t2, 3.0 - 4.0 * y * t4 / t3];
                if d.iter().any(|&x| x <= 0.0) {
                    [0.75; 3]
                } else {
                    d
                }
            })
            .collect();

        let mut vocab: BTreeSet<String> = corpus.iter().flatten().cloned().collect();
        vocab.insert("</s>".to_owned());
        vocab.insert("<unk>".to_owned());
        Self {
            order,
            adjusted,
            discounts,
            vocab: vocab.into_iter().collect(),
        }
    }

    fn d(&self, n: usize, c: u64) -> f64 {
        match c {
            0 => 0.0,
            1 => self.discounts[n - 1][0],
            2 => self.discounts[n - 1][1],
            _ => self.discounts[n - 1][2],
        }
    }

    pub fn prob(&self, w: &str, history: &[String]) -> f64 {
        let h = &history[history.len().saturating_sub(self.order - 1)..];
        let n = h.len() + 1;
        let table = &self.adjusted[n - 1];
        let mut total = 0.0;
        let mut held = 0.0;
        let mut count = 0;
        for (g, &c) in table {
            if g[..n - 1] == h[..] {
                total += c as f64;
                held += self.d(n, c);
                if g[n - 1] == w {
                    count = c;
                }
            }
        }
        let lower = if n == 1 {
            1.0 / self.vocab.len() as f64
        } else {
            self.prob(w, &h[1..])
        };
        if total == 0.0 {
            return lower;
        }
        (count as f64 - self.d(n, count)) / total + held / total * lower
    }
}

pub fn histories(oracle: &Oracle) -> Vec<Vec<String>> {
    let mut words: Vec<String> = oracle.vocab.iter().filter(|w| *w != "</s>").cloned().collect();
    words.sort();
    let mut out: Vec<Vec<String>> = vec![vec![], vec!["<s>".to_owned()]];
    let mut frontier = out.clone();
    for _ in 1..oracle.order - 1 {
        let mut next = Vec::new();
        for h in &frontier {
            for w in &words {
                let mut e = h.clone();
                e.push(w.clone());
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.extend(words.iter().map(|w| vec![w.clone()]));
    out.sort();
    out.dedup();
    out.retain(|h| h.len() < oracle.order);
    out
}

pub fn model_prob(m: &NGramModel, w: &str, h: &[String]) -> f64 {
    let h: Vec<&str> = h.iter().map(String::as_str).collect();
    10f64.powf(m.cond_logprob(w, &h))
}

/// Largest |model − oracle| over every (history, word) pair and the largest
/// |Σ_w p(w | h) − 1| over histories, plus the number of pairs compared.
pub fn deviation(model: &NGramModel, oracle: &Oracle) -> (f64, f64, usize) {
    let (mut worst, mut worst_sum, mut n) = (0.0f64, 0.0f64, 0);
    for h in &histories(oracle) {
        let mut sum = 0.0;
        for w in &oracle.vocab {
            let got = model_prob(model, w, h);
            worst = worst.max((oracle.prob(w, h) - got).abs());
            sum += got;
            n += 1;
        }
        worst_sum = worst_sum.max((sum - 1.0).abs());
    }
    (worst, worst_sum, n)
}
