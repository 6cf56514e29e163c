//! Trained models against a direct, unoptimized transcription of the
//! interpolated modified Kneser-Ney formulas.

mod support;

use ctcfuse::lm::{load_arpa, save_arpa, train, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::kn::{histories, lines, model_prob, Oracle, CORPORA};

#[test]
fn trained_probabilities_match_the_oracle() {
    for (text, order) in CORPORA {
        let corpus = lines(text);
        assert!(corpus.iter().map(Vec::len).sum::<usize>() <= 50);
        let (model, _) = train(&corpus, &TrainConfig { order, unk_threshold: 0 }).unwrap();
        let oracle = Oracle::new(&corpus, order);
        let hs = histories(&oracle);
        assert!(hs.len() > 10);
        for h in &hs {
            let mut sum = 0.0;
            for w in &oracle.vocab {
                let expected = oracle.prob(w, h);
                let got = model_prob(&model, w, h);
                assert!((expected - got).abs() < 1e-9, "order {order}: p({w} | {h:?}) = {got}, oracle {expected}");
                sum += got;
            }
            assert!((sum - 1.0).abs() < 1e-6, "order {order}: history {h:?} sums to {sum}");
        }
    }
}

#[test]
fn corpora_exercise_real_discounts() {
    let (_, report) = train(&lines(CORPORA[1].0), &TrainConfig { order: 4, unk_threshold: 0 }).unwrap();
    assert!(report.degenerate_orders.len() < 4, "{report:?}");
}

#[test]
fn training_line_beats_its_shuffles() {
    let corpus = lines(CORPORA[0].0);
    let (model, _) = train(&corpus, &TrainConfig { order: 3, unk_threshold: 0 }).unwrap();
    let line = &corpus[2];
    let original = model.score_sequence(line);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let mut shuffled = line.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        assert!(original >= model.score_sequence(&shuffled), "{shuffled:?}");
    }
}

#[test]
fn incremental_scoring_telescopes() {
    let corpus = lines(CORPORA[2].0);
    let (model, _) = train(&corpus, &TrainConfig { order: 5, unk_threshold: 0 }).unwrap();
    for line in &corpus {
        let mut state = ctcfuse::LmState::sentence_start(&model);
        let mut total = 0.0;
        for w in line.iter().map(String::as_str).chain(["</s>"]) {
            let (lp, next) = model.incremental_score_str(&state, w);
            total += lp;
            state = next;
            assert!(state.len() <= 4);
        }
        assert!((total - model.score_sequence(line)).abs() < 1e-9);
    }
}

#[test]
fn long_histories_are_truncated() {
    let corpus = lines(CORPORA[0].0);
    let (model, _) = train(&corpus, &TrainConfig { order: 3, unk_threshold: 0 }).unwrap();
    assert_eq!(
        model.cond_logprob("mere", &["ana", "maria", "ana", "are"]),
        model.cond_logprob("mere", &["ana", "are"])
    );
}

#[test]
fn arpa_round_trip_preserves_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (text, order) in CORPORA {
        let corpus = lines(text);
        let (model, _) = train(&corpus, &TrainConfig { order, unk_threshold: 0 }).unwrap();
        let reloaded = load_arpa(save_arpa(&model).as_bytes()).unwrap();
        let words: Vec<&str> = model.words().iter().map(String::as_str).chain(["oov"]).collect();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let len = rng.random_range(0..order + 2);
            let h: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
            let w = words[rng.random_range(0..words.len())];
            if w == "<s>" {
                continue;
            }
            worst = worst.max((model.cond_logprob(w, &h) - reloaded.cond_logprob(w, &h)).abs());
        }
        assert!(worst <= 1e-4, "order {order}: {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn more_copies_never_lower_a_sentence(which in 0usize..3, line in 0usize..3, extra in 1usize..4) {
        let (text, order) = CORPORA[which];
        let corpus = lines(text);
        let s = corpus[line % corpus.len()].clone();
        let (before, _) = train(&corpus, &TrainConfig { order, unk_threshold: 0 }).unwrap();
        let mut more = corpus.clone();
        more.extend(std::iter::repeat_n(s.clone(), extra));
        let (after, _) = train(&more, &TrainConfig { order, unk_threshold: 0 }).unwrap();
        prop_assert!(after.score_sequence(&s) >= before.score_sequence(&s) - 1e-12);
    }
}
