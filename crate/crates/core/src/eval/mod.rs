//! Word error rate and grid search over the fusion weights.

mod grid;
mod wer;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::decoder::DecodeError;
use crate::lattice::{load_rlat, LatticeError, LogitLattice};

pub use grid::{grid_points, grid_search, GridConfig, GridMode, GridPoint, GridSearchResult};
pub use wer::{align, wer, EditCounts, WerReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference side has no words")]
    EmptyReference,
    #[error("development set is empty")]
    EmptyDevSet,
    #[error("bad grid range: {0}")]
    BadRange(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("{path}: {source}")]
    Lattice { path: PathBuf, source: LatticeError },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `lattice-path TAB reference` entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub lattice: PathBuf,
    pub reference: String,
}

/// Parses a manifest. Relative lattice paths are resolved against `base`;
/// blank lines and `#` lines are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (path, reference) = line.split_once('\t').ok_or_else(|| EvalError::Manifest {
            line: i + 1,
            message: "expected lattice-path<TAB>reference".into(),
        })?;
        out.push(ManifestEntry {
            lattice: base.join(path.trim()),
            reference: reference.trim().to_owned(),
        });
    }
    Ok(out)
}

/// Reads a manifest file and every lattice it lists.
pub fn load_dev_set(manifest: &Path) -> Result<Vec<(LogitLattice, String)>, EvalError> {
    let text = std::fs::read_to_string(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base)?
        .into_iter()
        .map(|e| {
            let bytes = std::fs::read(&e.lattice)?;
            let lattice = load_rlat(&bytes).map_err(|source| EvalError::Lattice {
                path: e.lattice.clone(),
                source,
            })?;
            Ok((lattice, e.reference))
        })
        .collect()
}
