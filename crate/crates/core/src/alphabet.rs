//! CTC output space: the printable labels plus a trailing blank, and the
//! many-to-one collapse map from frame alignments to transcriptions.

use std::fmt;

use thiserror::Error;

/// Romanian letters in collation order, followed by the space label.
pub const ROMANIAN_LABELS: &str = "aăâbcdefghiîjklmnopqrsștțuvwxyz ";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("character {ch:?} at position {position} is not in the alphabet")]
    OutOfAlphabetCharacter { position: usize, ch: char },
    #[error("blank label found in a transcription at position {0}")]
    BlankInTranscription(usize),
    #[error("label index {0} is outside the alphabet")]
    IndexOutOfRange(usize),
    #[error("invalid alphabet: {0}")]
    Invalid(String),
}

/// Ordered set of printable labels. The blank label is implicit and always
/// takes the last index (`len()`), so the full output space has `len() + 1`
/// symbols.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<char>,
    // Index lookup for the common ASCII/Latin range; everything else goes
    // through a linear scan over at most a few dozen labels.
    fast: [u8; 0x300],
    space: Option<usize>,
}

const NO_LABEL: u8 = u8::MAX;

impl Alphabet {
    pub fn new(labels: impl IntoIterator<Item = char>) -> Result<Self, AlphabetError> {
        let labels: Vec<char> = labels.into_iter().collect();
        if labels.is_empty() {
            return Err(AlphabetError::Invalid("no labels".into()));
        }
        if labels.len() >= NO_LABEL as usize {
            return Err(AlphabetError::Invalid(format!("{} labels is too many", labels.len())));
        }
        let mut fast = [NO_LABEL; 0x300];
        for (i, &c) in labels.iter().enumerate() {
            if c.is_control() {
                return Err(AlphabetError::Invalid(format!("control character {c:?}")));
            }
            if labels[..i].contains(&c) {
                return Err(AlphabetError::Invalid(format!("duplicate label {c:?}")));
            }
            if (c as usize) < fast.len() {
                fast[c as usize] = i as u8;
            }
        }
        let space = labels.iter().position(|&c| c == ' ');
        Ok(Self { labels, fast, space })
    }

    /// The 33-symbol Romanian output space: 31 letters, space at 31, blank at 32.
    pub fn romanian() -> Self {
        Self::new(ROMANIAN_LABELS.chars()).expect("canonical alphabet is valid")
    }

    pub fn from_label_string(s: &str) -> Result<Self, AlphabetError> {
        Self::new(s.chars())
    }

    /// Number of printable labels (excluding blank).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Total number of output symbols including blank.
    pub fn size(&self) -> usize {
        self.labels.len() + 1
    }

    pub fn blank(&self) -> usize {
        self.labels.len()
    }

    pub fn space(&self) -> Option<usize> {
        self.space
    }

    pub fn labels(&self) -> &[char] {
        &self.labels
    }

    /// Printable labels concatenated in index order.
    pub fn label_string(&self) -> String {
        self.labels.iter().collect()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        if (c as usize) < self.fast.len() {
            let i = self.fast[c as usize];
            return (i != NO_LABEL).then_some(i as usize);
        }
        self.labels.iter().position(|&l| l == c)
    }

    pub fn label(&self, index: usize) -> Option<char> {
        self.labels.get(index).copied()
    }

    pub fn encode(&self, text: &str) -> Result<LabelSequence, AlphabetError> {
        text.chars()
            .enumerate()
            .map(|(position, ch)| {
                self.index_of(ch)
                    .ok_or(AlphabetError::OutOfAlphabetCharacter { position, ch })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(LabelSequence)
    }

    /// The CTC map B: merge adjacent repeats, then drop blanks.
    pub fn collapse(&self, alignment: &[usize]) -> LabelSequence {
        let blank = self.blank();
        let mut out = Vec::with_capacity(alignment.len());
        let mut prev = None;
        for &s in alignment {
            if Some(s) != prev && s != blank {
                out.push(s);
            }
            prev = Some(s);
        }
        LabelSequence(out)
    }

    pub fn decode_text(&self, labels: &[usize]) -> Result<String, AlphabetError> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if l == self.blank() {
                    Err(AlphabetError::BlankInTranscription(i))
                } else {
                    self.label(l).ok_or(AlphabetError::IndexOutOfRange(l))
                }
            })
            .collect()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Alphabet")
            .field("labels", &self.label_string())
            .field("blank", &self.blank())
            .finish()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::romanian()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSequence(pub Vec<usize>);

impl LabelSequence {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for LabelSequence {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for LabelSequence {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}
