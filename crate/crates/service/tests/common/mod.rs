//! Toy models, registered audio and randomized chain inputs.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use ctcfuse::audio::{parse_wav, wav_bytes};
use ctcfuse::corpus::{CountTable, Vocabulary};
use ctcfuse::correction::NameList;
use ctcfuse::lm::{train, TrainConfig};
use ctcfuse::{save_rlat, synth_lattice, Alphabet, FusionParams, NGramModel};
use ctcfuse_service::http::{deploy, Deployment};
use ctcfuse_service::pipeline::{ChainInput, Models, Registry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CORPUS: [(&str, usize); 9] = [
    ("s-a dus acasa", 30),
    ("sa dus", 1),
    ("sa carte", 25),
    ("ți-am spus", 20),
    ("ana are mere verzi", 15),
    ("maria are carte", 12),
    ("ion a spus da", 10),
    ("nu da", 6),
    ("mere verzi acasa", 8),
];

pub const NAMES: &str = "Maria\nIon\n";

/// Words the random fixtures draw from: known words, unhyphenated clitics,
/// names and near-misses of vocabulary words.
pub const POOL: [&str; 16] = [
    "ana", "are", "mere", "verzi", "sa", "dus", "acasa", "țiam", "spus", "maria", "ion", "carte", "da", "nu", "mene", "cartw",
];

pub fn counts() -> CountTable {
    let mut t = CountTable::new();
    for (line, n) in CORPUS {
        let tokens: Vec<&str> = line.split(' ').collect();
        for _ in 0..n {
            t.add_line(&tokens);
        }
    }
    t
}

pub fn lm() -> NGramModel {
    let lines: Vec<Vec<&str>> = CORPUS
        .iter()
        .flat_map(|(l, n)| std::iter::repeat_n(l.split(' ').collect(), *n))
        .collect();
    train(&lines, &TrainConfig { order: 3, unk_threshold: 0 }).unwrap().0
}

/// Deterministic pseudo-speech; different seeds give different PCM.
pub fn wav(seed: u64, sample_rate: u32) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<i16> = (0..8000).map(|_| rng.random_range(-3000..3000)).collect();
    wav_bytes(&samples, sample_rate, 1, 16)
}

pub fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..6);
    (0..n).map(|_| POOL[rng.random_range(0..POOL.len())]).collect::<Vec<_>>().join(" ")
}

pub struct Fixture {
    pub models: Models,
    /// `(input, text the lattice was synthesized from)`
    pub inputs: Vec<(ChainInput, String)>,
}

/// Models with `n` random utterances (alternating WAV and RLAT inputs),
/// plus the registered WAV for "salut" (seed 0) and for "țiam spus"
/// (seed 1).
pub fn fixture(n: usize, skip_threshold: usize, params: FusionParams) -> Fixture {
    let a = Alphabet::romanian();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut registry = Registry::default();
    let mut inputs = Vec::new();
    let add = |registry: &mut Registry, text: String, seed: u64, as_wav: bool, eps: f64| {
        let lattice = synth_lattice(&text, &a, 2, eps, seed).unwrap();
        let input = if as_wav {
            let w = wav(seed, 16_000);
            registry.insert(&parse_wav(&w).unwrap().pcm_bytes(), lattice);
            ChainInput::Wav(w)
        } else {
            ChainInput::Lattice(save_rlat(&lattice))
        };
        (input, text)
    };
    add(&mut registry, "salut".into(), 0, true, 0.0);
    add(&mut registry, "țiam spus".into(), 1, true, 0.0);
    for i in 0..n {
        let text = random_text(&mut rng);
        let eps = rng.random_range(0.0..0.3);
        inputs.push(add(&mut registry, text, 10 + i as u64, i % 2 == 0, eps));
    }
    let counts = counts();
    let vocab = Vocabulary::from_counts(&counts, 1);
    let models = Models::new(a, Some(lm()), params, counts, vocab, NameList::parse(NAMES))
        .with_registry(registry)
        .with_skip_threshold(skip_threshold);
    Fixture { models, inputs }
}

pub fn default_params() -> FusionParams {
    FusionParams { beam_width: 32, ..FusionParams::default() }
}

pub fn local() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 0))
}

pub async fn start(models: Models) -> Deployment {
    deploy(Arc::new(models), [local(), local(), local()]).await.unwrap()
}

/// An address nothing listens on.
pub async fn dead_address() -> String {
    let l = tokio::net::TcpListener::bind(local()).await.unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}
