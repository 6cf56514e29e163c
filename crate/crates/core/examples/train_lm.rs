//! Train a Kneser-Ney model, write it as ARPA, reload it and query it.

use ctcfuse::corpus::normalize_tokens;
use ctcfuse::lm::{load_arpa, save_arpa, train, TrainConfig};
use ctcfuse::LmState;

const CORPUS: &str = "Ana are mere verzi.
Maria are mere roșii.
Ana are pere.
Copiii merg la școală.
Maria merge la piață și cumpără mere.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lines: Vec<Vec<String>> = CORPUS.lines().map(normalize_tokens).collect();
    let (model, report) = train(&lines, &TrainConfig { order: 3, unk_threshold: 0 })?;
    println!("{} sentences, {} tokens", report.sentences, report.tokens);
    for (n, d) in report.discounts.iter().enumerate() {
        println!("order {}: D1={:.3} D2={:.3} D3+={:.3}", n + 1, d[0], d[1], d[2]);
    }
    println!("fallback discounts used for orders {:?}", report.degenerate_orders);

    let arpa = save_arpa(&model);
    println!("\n{}", arpa.lines().take(6).collect::<Vec<_>>().join("\n"));
    let model = load_arpa(arpa.as_bytes())?;

    for sentence in ["ana are mere", "mere are ana", "maria merge la școală"] {
        let words: Vec<&str> = sentence.split(' ').collect();
        println!("log10 p({sentence}) = {:.4}", model.score_sequence(&words));
    }

    // word-by-word, as the decoder queries it
    let mut state = LmState::sentence_start(&model);
    for w in ["ana", "are", "pere", "</s>"] {
        let (lp, next) = model.incremental_score_str(&state, w);
        println!("  {w:>5}: {lp:.4}");
        state = next;
    }
    Ok(())
}
