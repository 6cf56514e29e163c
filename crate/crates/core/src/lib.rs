//! Character-level CTC decoding with n-gram shallow fusion, plus the text
//! tooling around it: corpus cleaning, Kneser-Ney language models, hyphen
//! and capitalization restoration, unknown-word correction, and WER-driven
//! tuning of the fusion weights.
//!
//! Hypotheses are ranked by
//!
//! ```text
//! Q(y) = ln p_ctc(y|x) + alpha * ln p_lm(y) + beta * word_count(y)
//! ```
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod alphabet;
pub mod audio;
pub mod correction;
pub mod corpus;
pub mod decoder;
pub mod eval;
pub mod lattice;
pub mod lm;

pub use alphabet::{Alphabet, AlphabetError, LabelSequence};
pub use decoder::{beam_decode, greedy_decode, score_eq1, DecodeResult, FusionParams};
pub use lattice::{load_rlat, save_rlat, synth_lattice, LatticeError, LogitLattice};
pub use lm::{LmState, NGramModel};
