use std::fmt;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Corpus-level WER: all edits over all reference words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WerReport {
    pub edits: EditCounts,
    pub reference_words: usize,
    /// Percentage.
    pub wer: f64,
}

impl fmt::Display for WerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "WER {:.2}% (S={} I={} D={} N={})",
            self.wer, self.edits.substitutions, self.edits.insertions, self.edits.deletions, self.reference_words
        )
    }
}

/// Minimum word edits turning `reference` into `hypothesis`. The split into
/// S/I/D follows one backtrace that prefers substitution (or match), then
/// insertion, then deletion.
pub fn align(reference: &[&str], hypothesis: &[&str]) -> EditCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for (j, cell) in d[..w].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            d[i * w + j] = sub.min(d[i * w + j - 1] + 1).min(d[(i - 1) * w + j] + 1);
        }
    }
    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let mismatch = reference[i - 1] != hypothesis[j - 1];
            if d[(i - 1) * w + j - 1] + usize::from(mismatch) == here {
                counts.substitutions += usize::from(mismatch);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i * w + j - 1] + 1 == here {
            counts.insertions += 1;
            j -= 1;
        } else {
            counts.deletions += 1;
            i -= 1;
        }
    }
    counts
}

pub fn wer<R: AsRef<str>, H: AsRef<str>>(pairs: &[(R, H)]) -> Result<WerReport, EvalError> {
    let mut edits = EditCounts::default();
    let mut reference_words = 0;
    for (r, h) in pairs {
        let r: Vec<&str> = r.as_ref().split_whitespace().collect();
        let h: Vec<&str> = h.as_ref().split_whitespace().collect();
        let e = align(&r, &h);
        edits.substitutions += e.substitutions;
        edits.insertions += e.insertions;
        edits.deletions += e.deletions;
        reference_words += r.len();
    }
    if reference_words == 0 {
        return Err(EvalError::EmptyReference);
    }
    Ok(WerReport {
        edits,
        reference_words,
        wer: 100.0 * edits.total() as f64 / reference_words as f64,
    })
}
