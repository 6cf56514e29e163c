//! WAV input validation (mono, 16-bit, 16 kHz PCM only) and the MFCC front end.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub const REQUIRED_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AudioError {
    #[error("not a RIFF/WAVE file")]
    NotRiff,
    #[error("unsupported encoding (format code {0}); expected PCM mono, 16-bit, 16 kHz")]
    UnsupportedEncoding(u16),
    #[error("wrong channel count {0}; expected mono, 16-bit, 16 kHz")]
    WrongChannelCount(u16),
    #[error("wrong bit depth {0}; expected mono, 16-bit, 16 kHz")]
    WrongBitDepth(u16),
    #[error("wrong sample rate {0} Hz; expected mono, 16-bit, 16 kHz")]
    WrongSampleRate(u32),
    #[error("malformed WAV: {0}")]
    Malformed(String),
    #[error("audio shorter than one analysis window")]
    EmptyAudio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Little-endian PCM bytes of the samples.
    pub fn pcm_bytes(&self) -> Vec<u8> {
        self.samples.iter().flat_map(|s| s.to_le_bytes()).collect()
    }
}

fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

/// Parses a RIFF/WAVE byte buffer. Unknown chunks (LIST, fact, ...) are
/// skipped, but `fmt ` must come before `data`.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotRiff);
    }
    let mut pos = 12;
    let mut format = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = le_u32(&bytes[pos + 4..pos + 8]) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(len);
        match id {
            b"fmt " => {
                if len < 16 || body_end > bytes.len() {
                    return Err(AudioError::Malformed("short fmt chunk".into()));
                }
                let body = &bytes[body_start..body_end];
                let code = le_u16(&body[0..2]);
                let channels = le_u16(&body[2..4]);
                let rate = le_u32(&body[4..8]);
                let bits = le_u16(&body[14..16]);
                if code != 1 {
                    return Err(AudioError::UnsupportedEncoding(code));
                }
                if channels != 1 {
                    return Err(AudioError::WrongChannelCount(channels));
                }
                if bits != 16 {
                    return Err(AudioError::WrongBitDepth(bits));
                }
                if rate != REQUIRED_SAMPLE_RATE {
                    return Err(AudioError::WrongSampleRate(rate));
                }
                format = Some(rate);
            }
            b"data" => {
                let sample_rate = format
                    .ok_or_else(|| AudioError::Malformed("data chunk before fmt chunk".into()))?;
                // Recorders that stream sometimes leave the length unset; take what is there.
                let end = body_end.min(bytes.len());
                let data = &bytes[body_start..end];
                if !data.len().is_multiple_of(2) {
                    return Err(AudioError::Malformed("odd data length".into()));
                }
                let samples = data
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]))
                    .collect();
                return Ok(AudioClip {
                    samples,
                    sample_rate,
                });
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end.saturating_add(len & 1);
    }
    Err(AudioError::Malformed("no data chunk".into()))
}

/// Serializes a clip as a canonical 44-byte-header PCM WAV file.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    wav_bytes(&clip.samples, clip.sample_rate, 1, 16)
}

/// Writes a PCM WAV header with arbitrary parameters followed by the samples.
/// Mostly useful for producing files the parser must reject.
pub fn wav_bytes(samples: &[i16], sample_rate: u32, channels: u16, bits: u16) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let block_align = channels * bits / 8;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * u32::from(block_align)).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    /// Analysis window in seconds.
    pub window: f64,
    /// Hop between windows in seconds.
    pub hop: f64,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub fft_size: usize,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            window: 0.02,
            hop: 0.01,
            n_mels: 26,
            n_coeffs: 13,
            fft_size: 512,
            low_hz: 0.0,
            high_hz: 8000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n_frames: usize,
    pub n_coeffs: usize,
    pub window_length: f64,
    pub hop_length: f64,
    /// Row-major, `n_frames * n_coeffs`.
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_coeffs..(t + 1) * self.n_coeffs]
    }
}

/// `floor((len - win) / hop) + 1` for `len >= win`, else 0.
pub fn frame_count(len: usize, win: usize, hop: usize) -> usize {
    if len < win || win == 0 || hop == 0 {
        0
    } else {
        (len - win) / hop + 1
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters over the `fft_size / 2 + 1` magnitude bins.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_mels + 2` edge frequencies in Hz; band `m` spans
    /// `edges[m]..edges[m + 2]` and peaks at `edges[m + 1]`.
    pub edges: Vec<f64>,
    bin_hz: f64,
    n_bins: usize,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: f64, low_hz: f64, high_hz: f64) -> Self {
        let (lo, hi) = (hz_to_mel(low_hz), hz_to_mel(high_hz));
        let edges = (0..n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        Self {
            edges,
            bin_hz: sample_rate / fft_size as f64,
            n_bins: fft_size / 2 + 1,
        }
    }

    pub fn n_mels(&self) -> usize {
        self.edges.len() - 2
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.edges[band + 1]
    }

    /// Triangle weight of `band` at frequency `hz`.
    pub fn weight(&self, band: usize, hz: f64) -> f64 {
        let (l, c, r) = (self.edges[band], self.edges[band + 1], self.edges[band + 2]);
        if hz <= l || hz >= r {
            0.0
        } else if hz <= c {
            (hz - l) / (c - l)
        } else {
            (r - hz) / (r - c)
        }
    }

    pub fn apply(&self, magnitudes: &[f64]) -> Vec<f64> {
        (0..self.n_mels())
            .map(|m| {
                magnitudes
                    .iter()
                    .take(self.n_bins)
                    .enumerate()
                    .map(|(k, &x)| self.weight(m, k as f64 * self.bin_hz) * x)
                    .sum()
            })
            .collect()
    }
}

/// Orthonormal DCT-II, keeping the first `keep` coefficients.
pub fn dct2_ortho(x: &[f64], keep: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..keep.min(x.len()))
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Reusable MFCC extractor: Hamming window, magnitude FFT, mel filterbank,
/// log (floored at `ln 1e-10`), orthonormal DCT-II.
pub struct Mfcc {
    config: MfccConfig,
    win: usize,
    hop: usize,
    window: Vec<f64>,
    filterbank: MelFilterbank,
    fft: Arc<dyn Fft<f64>>,
}

const LOG_FLOOR: f64 = 1e-10;

impl Mfcc {
    pub fn new(config: MfccConfig, sample_rate: u32) -> Self {
        let sr = f64::from(sample_rate);
        let win = (config.window * sr).round() as usize;
        let hop = (config.hop * sr).round() as usize;
        let window = (0..win)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (win as f64 - 1.0)).cos())
            .collect();
        let filterbank =
            MelFilterbank::new(config.n_mels, config.fft_size, sr, config.low_hz, config.high_hz);
        let fft = FftPlanner::new().plan_fft_forward(config.fft_size);
        Self {
            config,
            win,
            hop,
            window,
            filterbank,
            fft,
        }
    }

    pub fn window_samples(&self) -> usize {
        self.win
    }

    pub fn hop_samples(&self) -> usize {
        self.hop
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Mel filterbank energies (before the log) for every frame.
    pub fn mel_energies(&self, samples: &[i16]) -> Vec<Vec<f64>> {
        let n = frame_count(samples.len(), self.win, self.hop);
        let mut buf = vec![Complex::new(0.0, 0.0); self.config.fft_size];
        (0..n)
            .map(|t| {
                let frame = &samples[t * self.hop..t * self.hop + self.win];
                buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
                for (i, (&s, &w)) in frame.iter().zip(&self.window).enumerate().take(buf.len()) {
                    buf[i].re = f64::from(s) * w;
                }
                self.fft.process(&mut buf);
                let mags: Vec<f64> = buf[..self.config.fft_size / 2 + 1]
                    .iter()
                    .map(|c| c.norm())
                    .collect();
                self.filterbank.apply(&mags)
            })
            .collect()
    }

    pub fn compute(&self, clip: &AudioClip) -> Result<FeatureMatrix, AudioError> {
        if clip.samples.len() < self.win {
            return Err(AudioError::EmptyAudio);
        }
        let energies = self.mel_energies(&clip.samples);
        let mut data = Vec::with_capacity(energies.len() * self.config.n_coeffs);
        for e in &energies {
            let logs: Vec<f64> = e.iter().map(|&x| x.max(LOG_FLOOR).ln()).collect();
            data.extend(dct2_ortho(&logs, self.config.n_coeffs));
        }
        Ok(FeatureMatrix {
            n_frames: energies.len(),
            n_coeffs: self.config.n_coeffs,
            window_length: self.config.window,
            hop_length: self.config.hop,
            data,
        })
    }
}

pub fn mfcc(clip: &AudioClip, config: &MfccConfig) -> Result<FeatureMatrix, AudioError> {
    Mfcc::new(config.clone(), clip.sample_rate).compute(clip)
}
