//! Small lattices, the LM-flip fixture and an exhaustive enumeration of
//! every alignment.

use std::collections::HashMap;

use ctcfuse::lattice::{alignment_lattice, target_alignment};
use ctcfuse::lm::{train, TrainConfig};
use ctcfuse::{Alphabet, LogitLattice, NGramModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// T in 1..=4 frames over V in 2..=4 symbols, rows with no zero entries.
pub fn random_lattice(rng: &mut ChaCha8Rng) -> LogitLattice {
    let labels = ["a", "ab", "abc"][rng.random_range(0..3)];
    let alphabet = Alphabet::new(labels.chars()).unwrap();
    let t = rng.random_range(1..=4);
    let rows: Vec<Vec<f64>> = (0..t)
        .map(|_| {
            let w: Vec<f64> = (0..alphabet.size()).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    LogitLattice::from_probabilities(alphabet, &rows).unwrap()
}

/// "mere rosii" and "mere verzi" overlaid frame by frame, with the first
/// slightly stronger acoustically.
pub fn flip_lattice(a: &Alphabet) -> LogitLattice {
    let rosii = target_alignment("mere rosii", a, 1).unwrap();
    let mut verzi = target_alignment("mere verzi", a, 1).unwrap();
    verzi.insert(9, a.blank());
    assert_eq!(rosii.len(), verzi.len());
    let r = alignment_lattice(&rosii, a, 0.0, 0).unwrap();
    let v = alignment_lattice(&verzi, a, 0.0, 0).unwrap();
    LogitLattice::mix(&[(0.55, &r), (0.45, &v)]).unwrap()
}

pub fn flip_lm() -> NGramModel {
    train(&[vec!["mere", "verzi"], vec!["rosii"]], &TrainConfig { order: 2, unk_threshold: 0 })
        .unwrap()
        .0
}

/// Every transcription with nonzero probability and its exact marginal.
pub fn support(l: &LogitLattice) -> HashMap<String, f64> {
    let a = l.alphabet();
    let mut paths: Vec<(Vec<usize>, f64)> = vec![(vec![], 1.0)];
    for t in 0..l.frames() {
        let row: Vec<f64> = l.row(t).iter().map(|&v| (v as f64).exp()).collect();
        let norm: f64 = row.iter().sum();
        let mut next = Vec::new();
        for (p, w) in &paths {
            for (s, &q) in row.iter().enumerate() {
                let q = q / norm;
                if q > 0.0 {
                    let mut e = p.clone();
                    e.push(s);
                    next.push((e, w * q));
                }
            }
        }
        paths = next;
    }
    let mut out: HashMap<String, f64> = HashMap::new();
    for (p, w) in paths {
        *out.entry(a.decode_text(&a.collapse(&p)).unwrap()).or_default() += w;
    }
    out
}

/// Development set where the acoustics alone get some utterances wrong and
/// the LM of [`flip_lm`] can fix them: noisy copies of the flip lattice
/// (reference "mere verzi") next to clean utterances.
pub fn noisy_dev_set() -> Vec<(LogitLattice, String)> {
    let a = Alphabet::romanian();
    let flip = flip_lattice(&a);
    let mut dev = Vec::new();
    for seed in 0..6u64 {
        let noise = alignment_lattice(&argmax_path(&flip), &a, 0.9, seed).unwrap();
        let l = LogitLattice::mix(&[(0.95, &flip), (0.05, &noise)]).unwrap();
        dev.push((l, "mere verzi".to_owned()));
    }
    for (i, text) in ["mere verzi", "rosii", "mere"].iter().enumerate() {
        let path = target_alignment(text, &a, 2).unwrap();
        dev.push((alignment_lattice(&path, &a, 0.05, 100 + i as u64).unwrap(), (*text).to_owned()));
    }
    dev
}

fn argmax_path(l: &LogitLattice) -> Vec<usize> {
    l.rows()
        .map(|row| (0..row.len()).fold(0, |best, i| if row[i] > row[best] { i } else { best }))
        .collect()
}

pub const LATENCY_FRAMES: usize = 1250;

const LATENCY_WORDS: [&str; 24] = [
    "ana", "are", "mere", "pere", "verzi", "și", "nu", "casa", "mare", "în", "oraș", "copiii", "merg", "la", "școală",
    "astăzi", "vremea", "este", "frumoasă", "mâine", "plouă", "poate", "drumul", "lung",
];

fn latency_sentence(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| LATENCY_WORDS[rng.random_range(0..LATENCY_WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// Toy 5-gram model over a small seeded corpus.
pub fn latency_lm() -> NGramModel {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1250);
    let corpus: Vec<Vec<String>> = (0..200)
        .map(|_| {
            let n = rng.random_range(3..12);
            latency_sentence(&mut rng, n).split(' ').map(str::to_owned).collect()
        })
        .collect();
    train(&corpus, &TrainConfig { order: 5, unk_threshold: 0 }).unwrap().0
}

/// A 1250-frame, 33-symbol lattice: about 25 s of speech at 20 ms frames,
/// with 30% of every frame's mass spread over the wrong symbols.
pub fn latency_lattice() -> LogitLattice {
    let a = Alphabet::romanian();
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(25);
    let text = latency_sentence(&mut rng, 200);
    let mut path = target_alignment(&text, &a, 2).unwrap();
    path.truncate(LATENCY_FRAMES);
    path.resize(LATENCY_FRAMES, a.blank());
    alignment_lattice(&path, &a, 0.3, 7).unwrap()
}
