//! WAV validation and MFCC features for a synthetic tone.

use ctcfuse::audio::{mfcc, parse_wav, wav_bytes, MfccConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples: Vec<i16> = (0..16_000)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            (8000.0 * (2.0 * std::f64::consts::PI * 440.0 * t).sin()) as i16
        })
        .collect();

    let clip = parse_wav(&wav_bytes(&samples, 16_000, 1, 16))?;
    println!("{} samples, {:.2} s", clip.samples.len(), clip.duration());

    let features = mfcc(&clip, &MfccConfig::default())?;
    println!(
        "{} frames x {} coefficients ({} ms window, {} ms hop)",
        features.n_frames,
        features.n_coeffs,
        features.window_length * 1000.0,
        features.hop_length * 1000.0
    );
    let first: Vec<String> = features.frame(0).iter().map(|c| format!("{c:.2}")).collect();
    println!("frame 0: [{}]", first.join(", "));

    for (rate, channels, bits) in [(44_100, 1, 16), (16_000, 2, 16), (16_000, 1, 8)] {
        let err = parse_wav(&wav_bytes(&samples[..64], rate, channels, bits)).unwrap_err();
        println!("{rate} Hz, {channels} ch, {bits} bit: {err}");
    }
    Ok(())
}
