//! Corpus-level word error rate with its edit breakdown.

use ctcfuse::eval::{align, wer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = [
        ("ana are mere", "ana are mere"),
        ("ana are mere", "ana mere"),
        ("maria merge la piață", "maria merge la la piață"),
        ("copiii merg la școală", "copii merg școală"),
    ];
    for (r, h) in pairs {
        let r_words: Vec<&str> = r.split_whitespace().collect();
        let h_words: Vec<&str> = h.split_whitespace().collect();
        let e = align(&r_words, &h_words);
        println!("{r:<24} | {h:<26} S={} I={} D={}", e.substitutions, e.insertions, e.deletions);
    }
    println!("{}", wer(&pairs)?);
    Ok(())
}
