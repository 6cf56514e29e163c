//! Greedy and beam decoding of a synthetic lattice, with an RLAT round trip.
//!
//! ```text
//! cargo run -p ctcfuse --example decode_lattice -- "ana are mere" 0.35
//! ```

use ctcfuse::{beam_decode, greedy_decode, load_rlat, save_rlat, synth_lattice, Alphabet, FusionParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "ana are mere".into());
    let noise: f64 = args.next().map_or(Ok(0.35), |s| s.parse())?;

    let alphabet = Alphabet::romanian();
    let lattice = synth_lattice(&text, &alphabet, 2, noise, 42)?;
    let bytes = save_rlat(&lattice);
    let lattice = load_rlat(&bytes)?;
    println!("{} frames x {} symbols, {} RLAT bytes", lattice.frames(), lattice.symbols(), bytes.len());

    let greedy = greedy_decode(&lattice);
    println!("greedy: {:?} (best path ln p = {:.3})", greedy.transcription, greedy.log_pctc);

    for hyp in beam_decode(&lattice, &FusionParams::no_lm(64), None, 5)? {
        println!("beam:   {:<24} ln p_ctc = {:.3}", format!("{:?}", hyp.transcription), hyp.log_pctc);
    }
    Ok(())
}
