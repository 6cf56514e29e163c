//! Corpus cleaning, tokenization, vocabulary and bigram counts.

use ctcfuse::corpus::{build_counts, clean_lines, normalize_tokens, AbbreviationTable, CleaningConfig, Vocabulary};

const RAW: &str = "Ana a cumpărat mere de la piață, dl. Popescu le-a vândut.
prea scurt
Vezi detalii pe https://exemplu.ro despre oraș
Mașina costă 20000 de lei în București.
This line has no Romanian diacritics at all.
Maria și Ana s-au dus acasă după școală.";

fn main() {
    let config = CleaningConfig {
        abbreviations: AbbreviationTable::parse_tsv("dl.\tdomnul\n").expect("valid table"),
        ..CleaningConfig::default()
    };
    let (kept, stats) = clean_lines(RAW.lines(), &config);
    println!("{stats}");
    for line in &kept {
        println!("  {line}");
    }

    let tokens: Vec<Vec<String>> = kept.iter().map(|l| normalize_tokens(l)).collect();
    let counts = build_counts(&tokens);
    let vocab = Vocabulary::from_counts(&counts, 1);
    let mut words: Vec<(&str, u64)> = vocab.members().collect();
    words.sort();
    println!("{} words, {} tokens", words.len(), counts.total);
    println!("bigram(s-au, dus) = {}", counts.bigram("s-au", "dus"));
}
