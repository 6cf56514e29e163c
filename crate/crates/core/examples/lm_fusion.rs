//! Shallow fusion changes the decision: acoustics prefer "mere rosii",
//! the language model prefers "mere verzi".

use ctcfuse::lattice::{alignment_lattice, target_alignment};
use ctcfuse::lm::{train, TrainConfig};
use ctcfuse::{beam_decode, Alphabet, FusionParams, LogitLattice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Alphabet::romanian();
    let rosii = target_alignment("mere rosii", &a, 1)?;
    let mut verzi = target_alignment("mere verzi", &a, 1)?;
    verzi.insert(9, a.blank()); // pad to the same length
    let lattice = LogitLattice::mix(&[
        (0.55, &alignment_lattice(&rosii, &a, 0.0, 0)?),
        (0.45, &alignment_lattice(&verzi, &a, 0.0, 0)?),
    ])?;

    let (lm, _) = train(&[vec!["mere", "verzi"], vec!["rosii"]], &TrainConfig { order: 2, unk_threshold: 0 })?;

    for alpha in [0.0, 0.25, 0.5, 1.0] {
        let params = FusionParams { beam_width: 64, ..FusionParams::default() }.with_weights(alpha, 0.0);
        let best = &beam_decode(&lattice, &params, Some(&lm), 1)?[0];
        println!(
            "alpha {alpha:.2}: {:<12} ln p_ctc {:>7.3}  ln p_lm {:>7.3}  Q {:>7.3}",
            best.transcription, best.log_pctc, best.lm_log, best.q_score
        );
    }
    Ok(())
}
