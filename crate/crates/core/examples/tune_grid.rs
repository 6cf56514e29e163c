//! Grid search over alpha and beta on a synthetic development set.

use ctcfuse::eval::{grid_search, GridConfig, GridMode};
use ctcfuse::lattice::{alignment_lattice, target_alignment};
use ctcfuse::lm::{train, TrainConfig};
use ctcfuse::{Alphabet, LogitLattice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Alphabet::romanian();
    // acoustically ambiguous between the reference and a wrong word
    let ambiguous = |good: &str, bad: &str, seed| -> Result<LogitLattice, Box<dyn std::error::Error>> {
        let g = target_alignment(good, &a, 2)?;
        let mut b = target_alignment(bad, &a, 2)?;
        b.resize(g.len(), a.blank());
        Ok(LogitLattice::mix(&[
            (0.45, &alignment_lattice(&g, &a, 0.1, seed)?),
            (0.55, &alignment_lattice(&b, &a, 0.1, seed + 1)?),
        ])?)
    };
    let dev = vec![
        (ambiguous("ana are mere", "ana are mare", 1)?, "ana are mere".to_owned()),
        (ambiguous("mere verzi", "mare verzi", 3)?, "mere verzi".to_owned()),
        (ambiguous("ana are pere", "ana are pare", 5)?, "ana are pere".to_owned()),
    ];
    let corpus = [vec!["ana", "are", "mere"], vec!["mere", "verzi"], vec!["ana", "are", "pere"]];
    let (lm, _) = train(&corpus, &TrainConfig { order: 3, unk_threshold: 0 })?;

    for mode in [GridMode::FullRedecode, GridMode::NbestRescore] {
        let config = GridConfig { beam_width: 32, mode, ..GridConfig::default() };
        let r = grid_search(&dev, Some(&lm), &config)?;
        let origin = r.points[0];
        println!(
            "{:>5}: {} points, WER(0,0) = {:.2}%, best WER({:.1},{:.1}) = {:.2}%",
            mode.name(),
            r.points.len(),
            origin.wer,
            r.best.alpha,
            r.best.beta,
            r.best.wer
        );
    }
    Ok(())
}
