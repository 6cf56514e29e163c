//! Starts the three services on free ports, registers one recording and
//! runs it through the chain over HTTP.

use std::sync::Arc;

use ctcfuse::audio::wav_bytes;
use ctcfuse::corpus::{normalize_tokens, CountTable, Vocabulary};
use ctcfuse::correction::NameList;
use ctcfuse::{save_rlat, synth_lattice, Alphabet, FusionParams};
use ctcfuse_service::chain::{ChainClient, Endpoints};
use ctcfuse_service::http::deploy;
use ctcfuse_service::pipeline::{ChainInput, Models, Registry};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alphabet = Alphabet::romanian();
    let mut counts = CountTable::new();
    for (line, n) in [("ți-am spus că maria a venit", 20), ("s-a dus acasă", 20), ("ana are mere", 20)] {
        for _ in 0..n {
            counts.add_line(&normalize_tokens(line));
        }
    }
    let vocab = Vocabulary::from_counts(&counts, 10);

    // the mock acoustic backend maps a recording to a pre-computed lattice
    let pcm: Vec<i16> = (0..8000).map(|i| ((i * 37) % 2000) as i16 - 1000).collect();
    let wav = wav_bytes(&pcm, 16_000, 1, 16);
    let pcm_bytes: Vec<u8> = pcm.iter().flat_map(|s| s.to_le_bytes()).collect();
    let mut registry = Registry::default();
    registry.insert(&pcm_bytes, synth_lattice("țiam spus că maria a venit", &alphabet, 2, 0.1, 7)?);

    let models = Models::new(alphabet.clone(), None, FusionParams::no_lm(32), counts, vocab, NameList::parse("Maria\n"))
        .with_registry(registry);
    let local = "127.0.0.1:0".parse()?;
    let d = deploy(Arc::new(models), [local; 3]).await?;
    println!("transcribe {}  hyphen {}  unknown {}", d.transcribe.url(), d.hyphen.url(), d.unknown.url());

    let client = ChainClient::new(
        Endpoints {
            transcribe: d.transcribe.url(),
            hyphen: d.hyphen.url(),
            unknown: d.unknown.url(),
        },
        0,
    );
    client.health().await?;

    let out = client.run(&ChainInput::Wav(wav)).await?;
    println!("transcription: {}", out.transcription);
    if let Some(h) = &out.hyphen {
        println!("hyphen:        {}  {:?}", h.text, h.comments);
    }
    println!("final:         {}  {:?}", out.text(), out.unknown.comments);

    let rlat = save_rlat(&synth_lattice("ana are mene", &alphabet, 2, 0.0, 0)?);
    let out = client.run(&ChainInput::Lattice(rlat)).await?;
    println!("lattice input: {} -> {}", out.transcription, out.text());
    Ok(())
}
