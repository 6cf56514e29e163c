//! Per-frame log-probability lattices, the RLAT interchange format and a
//! synthetic lattice generator that stands in for an acoustic model.
//!
//! RLAT layout (little-endian):
//!
//! ```text
//! magic        4 bytes  "RLAT"
//! version      u16      1
//! alpha_len    u16      byte length of the label string
//! alphabet     UTF-8    printable labels in index order (blank implied last)
//! frame_dur    f32      seconds per frame
//! frames       u32      T
//! symbols      u32      V (labels + 1)
//! values       f32 * T * V, row-major by frame
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};

/// Log value used for zero probability.
pub const LOG_ZERO: f32 = -1e9;
pub const DEFAULT_FRAME_DURATION: f32 = 0.02;
pub const RLAT_MAGIC: &[u8; 4] = b"RLAT";
pub const RLAT_VERSION: u16 = 1;

const ROW_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("frame {frame}: row log-sum-exp deviates from 0 by {deviation}")]
    UnnormalizedRow { frame: usize, deviation: f64 },
    #[error("frame {frame}, symbol {symbol}: value is not a log probability")]
    NonLogProbability { frame: usize, symbol: usize },
    #[error("bad magic {0:?}, expected \"RLAT\"")]
    BadMagic([u8; 4]),
    #[error("unsupported RLAT version {0}")]
    UnsupportedVersion(u16),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("truncated or oversized payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("lattice has no frames")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// T x V matrix of natural-log probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitLattice {
    alphabet: Alphabet,
    frames: usize,
    values: Vec<f32>,
    frame_duration: f32,
}

impl LogitLattice {
    /// Builds a lattice from row-major log probabilities and validates it.
    pub fn new(alphabet: Alphabet, values: Vec<f32>) -> Result<Self, LatticeError> {
        let v = alphabet.size();
        if values.is_empty() {
            return Err(LatticeError::Empty);
        }
        if !values.len().is_multiple_of(v) {
            return Err(LatticeError::Shape(format!(
                "{} values is not a multiple of {v} symbols",
                values.len()
            )));
        }
        let lattice = Self {
            frames: values.len() / v,
            alphabet,
            values,
            frame_duration: DEFAULT_FRAME_DURATION,
        };
        lattice.validate()?;
        Ok(lattice)
    }

    /// Builds a lattice from per-frame probabilities (not logs). Zero
    /// probabilities map to [`LOG_ZERO`].
    pub fn from_probabilities(alphabet: Alphabet, rows: &[Vec<f64>]) -> Result<Self, LatticeError> {
        let v = alphabet.size();
        let mut values = Vec::with_capacity(rows.len() * v);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != v {
                return Err(LatticeError::Shape(format!(
                    "frame {t} has {} entries, expected {v}",
                    row.len()
                )));
            }
            values.extend(row.iter().map(|&p| prob_to_log(p)));
        }
        Self::new(alphabet, values)
    }

    pub fn with_frame_duration(mut self, seconds: f32) -> Self {
        self.frame_duration = seconds;
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn symbols(&self) -> usize {
        self.alphabet.size()
    }

    pub fn frame_duration(&self) -> f32 {
        self.frame_duration
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f32] {
        let v = self.symbols();
        &self.values[t * v..(t + 1) * v]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.symbols())
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        for (frame, row) in self.rows().enumerate() {
            if let Some(symbol) = row
                .iter()
                .position(|&x| x.is_nan() || f64::from(x) > ROW_TOLERANCE)
            {
                return Err(LatticeError::NonLogProbability { frame, symbol });
            }
            let lse = log_sum_exp(row.iter().map(|&x| f64::from(x)));
            if !lse.is_finite() || lse.abs() > ROW_TOLERANCE {
                return Err(LatticeError::UnnormalizedRow {
                    frame,
                    deviation: lse,
                });
            }
        }
        Ok(())
    }

    /// Mixes lattices of identical shape frame by frame in probability space.
    /// Weights are normalised to sum to one.
    pub fn mix(parts: &[(f64, &LogitLattice)]) -> Result<Self, LatticeError> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| LatticeError::Shape("nothing to mix".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if total.is_nan() || total <= 0.0 || parts.iter().any(|(w, _)| *w < 0.0) {
            return Err(LatticeError::Shape("mixture weights must be non-negative".into()));
        }
        for (_, l) in parts {
            if l.alphabet != first.alphabet {
                return Err(LatticeError::AlphabetMismatch("mixed lattices differ".into()));
            }
            if l.frames != first.frames {
                return Err(LatticeError::Shape(format!(
                    "cannot mix {} frames with {} frames",
                    l.frames, first.frames
                )));
            }
        }
        let values = (0..first.values.len())
            .map(|i| {
                let p: f64 = parts
                    .iter()
                    .map(|(w, l)| w / total * f64::from(l.values[i]).exp())
                    .sum();
                prob_to_log(p)
            })
            .collect();
        Ok(Self::new(first.alphabet.clone(), values)?.with_frame_duration(first.frame_duration))
    }

    pub fn to_rlat(&self) -> Vec<u8> {
        save_rlat(self)
    }
}

fn prob_to_log(p: f64) -> f32 {
    if p > 0.0 {
        (p.ln() as f32).max(LOG_ZERO)
    } else {
        LOG_ZERO
    }
}

pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn save_rlat(lattice: &LogitLattice) -> Vec<u8> {
    let labels = lattice.alphabet.label_string();
    let mut out = Vec::with_capacity(20 + labels.len() + lattice.values.len() * 4);
    out.extend_from_slice(RLAT_MAGIC);
    out.extend_from_slice(&RLAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(labels.len() as u16).to_le_bytes());
    out.extend_from_slice(labels.as_bytes());
    out.extend_from_slice(&lattice.frame_duration.to_le_bytes());
    out.extend_from_slice(&(lattice.frames as u32).to_le_bytes());
    out.extend_from_slice(&(lattice.symbols() as u32).to_le_bytes());
    for v in &lattice.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LatticeError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(LatticeError::TruncatedPayload {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, LatticeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, LatticeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, LatticeError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses an RLAT file. The result has passed [`LogitLattice::validate`].
pub fn load_rlat(bytes: &[u8]) -> Result<LogitLattice, LatticeError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 {
        let mut m = [0u8; 4];
        m[..bytes.len()].copy_from_slice(bytes);
        return Err(LatticeError::BadMagic(m));
    }
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if &magic != RLAT_MAGIC {
        return Err(LatticeError::BadMagic(magic));
    }
    let version = r.u16()?;
    if version != RLAT_VERSION {
        return Err(LatticeError::UnsupportedVersion(version));
    }
    let alpha_len = r.u16()? as usize;
    let labels = std::str::from_utf8(r.take(alpha_len)?)
        .map_err(|e| LatticeError::AlphabetMismatch(format!("label string is not UTF-8: {e}")))?;
    let alphabet = Alphabet::from_label_string(labels)?;
    let frame_duration = r.f32()?;
    let frames = r.u32()? as usize;
    let symbols = r.u32()? as usize;
    if symbols != alphabet.size() {
        return Err(LatticeError::AlphabetMismatch(format!(
            "header declares {symbols} symbols but the alphabet has {}",
            alphabet.size()
        )));
    }
    let expected = r.pos + frames * symbols * 4;
    if bytes.len() != expected {
        return Err(LatticeError::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    let values = (0..frames * symbols)
        .map(|_| r.f32())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LogitLattice::new(alphabet, values)?.with_frame_duration(frame_duration))
}

/// Like [`load_rlat`] but also requires the file's alphabet to equal `expected`.
pub fn load_rlat_with(bytes: &[u8], expected: &Alphabet) -> Result<LogitLattice, LatticeError> {
    let lattice = load_rlat(bytes)?;
    if lattice.alphabet() != expected {
        return Err(LatticeError::AlphabetMismatch(format!(
            "file labels {:?} differ from expected {:?}",
            lattice.alphabet().label_string(),
            expected.label_string()
        )));
    }
    Ok(lattice)
}

/// Frame-level target path for `text`: each label repeated
/// `frames_per_label` times, with one blank frame between identical
/// consecutive labels.
pub fn target_alignment(
    text: &str,
    alphabet: &Alphabet,
    frames_per_label: usize,
) -> Result<Vec<usize>, LatticeError> {
    if frames_per_label == 0 {
        return Err(LatticeError::Shape("frames_per_label must be positive".into()));
    }
    let labels = alphabet.encode(text)?;
    let mut path = Vec::with_capacity(labels.len() * (frames_per_label + 1));
    for (i, &l) in labels.iter().enumerate() {
        if i > 0 && labels[i - 1] == l {
            path.push(alphabet.blank());
        }
        path.extend(std::iter::repeat_n(l, frames_per_label));
    }
    Ok(path)
}

/// Lattice whose frame `t` puts `1 - confusion` on `path[t]` and spreads
/// `confusion` over the other symbols. The spread is drawn from a seeded
/// generator, so identical arguments give identical lattices.
pub fn alignment_lattice(
    path: &[usize],
    alphabet: &Alphabet,
    confusion: f64,
    seed: u64,
) -> Result<LogitLattice, LatticeError> {
    if !(0.0..1.0).contains(&confusion) {
        return Err(LatticeError::Shape(format!(
            "confusion {confusion} outside [0, 1)"
        )));
    }
    let v = alphabet.size();
    if let Some(&bad) = path.iter().find(|&&s| s >= v) {
        return Err(AlphabetError::IndexOutOfRange(bad).into());
    }
    if path.is_empty() {
        // an empty utterance is a single silent frame
        let mut row = vec![0.0; v];
        row[alphabet.blank()] = 1.0;
        return LogitLattice::from_probabilities(alphabet.clone(), &[row]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = path
        .iter()
        .map(|&target| {
            let mut row = vec![0.0; v];
            if confusion > 0.0 {
                let weights: Vec<f64> = (0..v - 1).map(|_| rng.random_range(0.5..1.5)).collect();
                let total: f64 = weights.iter().sum();
                let mut others = weights.iter();
                for (s, p) in row.iter_mut().enumerate() {
                    if s != target {
                        *p = confusion * others.next().unwrap() / total;
                    }
                }
            }
            row[target] = 1.0 - confusion;
            row
        })
        .collect();
    LogitLattice::from_probabilities(alphabet.clone(), &rows)
}

/// Synthetic lattice for `text`; see [`target_alignment`] and
/// [`alignment_lattice`].
pub fn synth_lattice(
    text: &str,
    alphabet: &Alphabet,
    frames_per_label: usize,
    confusion: f64,
    seed: u64,
) -> Result<LogitLattice, LatticeError> {
    let path = target_alignment(text, alphabet, frames_per_label)?;
    alignment_lattice(&path, alphabet, confusion, seed)
}
