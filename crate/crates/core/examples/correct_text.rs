//! Hyphen restoration, name capitalization and unknown-word replacement.

use ctcfuse::corpus::{normalize_tokens, CountTable, Vocabulary};
use ctcfuse::correction::{build_inventory, capitalize, correct_unknown, restore_hyphens, NameList, UnknownConfig};

const CORPUS: [(&str, usize); 5] = [
    ("s-a dus acasă", 30),
    ("sa dus", 1),
    ("sa carte", 25),
    ("ți-am spus", 20),
    ("maria are mere verzi", 15),
];

fn main() {
    let mut counts = CountTable::new();
    for (line, n) in CORPUS {
        for _ in 0..n {
            counts.add_line(&normalize_tokens(line));
        }
    }
    let inventory = build_inventory(&counts);
    let vocab = Vocabulary::from_counts(&counts, 10);
    let names = NameList::parse("Maria\nIon\n");

    for input in ["sa dus acasă", "sa carte", "țiam spus", "maria are mene verzi"] {
        let hyphen = restore_hyphens(&normalize_tokens(input), &inventory, &counts);
        let cased = capitalize(&hyphen.tokens, &names, false);
        let lowered: Vec<String> = cased.iter().map(|t| t.to_lowercase()).collect();
        let fixed = correct_unknown(&lowered, &vocab, &counts, UnknownConfig::default());
        let out: Vec<&str> = cased
            .iter()
            .zip(&lowered)
            .zip(&fixed.tokens)
            .map(|((c, l), f)| if l == f { c.as_str() } else { f.as_str() })
            .collect();
        println!("{input:<22} -> {:<22} {:?}", out.join(" "), [hyphen.comments, fixed.comments].concat());
    }
}
