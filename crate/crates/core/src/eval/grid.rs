use std::fmt::Write as _;

use rayon::prelude::*;

use super::{wer, EvalError};
use crate::decoder::{beam_decode, ranking, rescore, DecodeResult, FusionParams};
use crate::lattice::LogitLattice;
use crate::lm::NGramModel;

/// Grid coordinates are kept as integers in these units so that repeated
/// steps never drift.
const SCALE: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridMode {
    /// Run the beam search again at every grid point.
    #[default]
    FullRedecode,
    /// Decode once without the LM, keep the n-best list and re-rank it per
    /// point. Faster, but the LM never influences pruning.
    NbestRescore,
}

impl GridMode {
    pub fn name(self) -> &'static str {
        match self {
            GridMode::FullRedecode => "full",
            GridMode::NbestRescore => "nbest",
        }
    }
}

impl std::str::FromStr for GridMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" | "full-redecode" => Ok(GridMode::FullRedecode),
            "nbest" | "nbest-rescore" => Ok(GridMode::NbestRescore),
            other => Err(EvalError::BadRange(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub step: f64,
    pub beam_width: usize,
    /// Hypotheses kept per utterance in n-best mode.
    pub n_best: usize,
    pub mode: GridMode,
    pub parallel: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            alpha: (0.0, 1.5),
            beta: (0.0, 3.0),
            step: 0.1,
            beam_width: 128,
            n_best: 16,
            mode: GridMode::FullRedecode,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub wer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    /// Every point in ascending `(alpha, beta)` order.
    pub points: Vec<GridPoint>,
    /// Lowest WER; the first such point in `points` order.
    pub best: GridPoint,
    pub mode: GridMode,
}

impl GridSearchResult {
    /// `alpha,beta,wer` rows with a 4-decimal WER.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,wer\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{:.4}", fmt_coord(p.alpha), fmt_coord(p.beta), p.wer);
        }
        out
    }
}

fn fmt_coord(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map_or_else(|| s.to_owned(), |s| format!("{s}.0"));
    s
}

fn scaled(x: f64, what: &str) -> Result<i64, EvalError> {
    if !x.is_finite() || x < 0.0 {
        return Err(EvalError::BadRange(format!("{what} = {x} must be finite and >= 0")));
    }
    Ok((x * SCALE).round() as i64)
}

fn axis((lo, hi): (f64, f64), step: i64, what: &str) -> Result<Vec<f64>, EvalError> {
    let (lo, hi) = (scaled(lo, what)?, scaled(hi, what)?);
    if lo > hi {
        return Err(EvalError::BadRange(format!("{what} range is reversed")));
    }
    Ok((0..=(hi - lo) / step).map(|k| (lo + k * step) as f64 / SCALE).collect())
}

/// All `(alpha, beta)` pairs of the configured ranges, both ends included.
pub fn grid_points(config: &GridConfig) -> Result<Vec<(f64, f64)>, EvalError> {
    let step = scaled(config.step, "step")?;
    if step == 0 {
        return Err(EvalError::BadRange("step must be positive".into()));
    }
    let alphas = axis(config.alpha, step, "alpha")?;
    let betas = axis(config.beta, step, "beta")?;
    Ok(alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect())
}

fn map_points<F>(points: &[(f64, f64)], parallel: bool, f: F) -> Result<Vec<GridPoint>, EvalError>
where
    F: Fn(f64, f64) -> Result<f64, EvalError> + Sync,
{
    let eval = |&(alpha, beta): &(f64, f64)| f(alpha, beta).map(|wer| GridPoint { alpha, beta, wer });
    if parallel {
        points.par_iter().map(eval).collect()
    } else {
        points.iter().map(eval).collect()
    }
}

/// Evaluates corpus WER at every grid point and returns the whole surface.
pub fn grid_search(
    dev: &[(LogitLattice, String)],
    lm: Option<&NGramModel>,
    config: &GridConfig,
) -> Result<GridSearchResult, EvalError> {
    if dev.is_empty() {
        return Err(EvalError::EmptyDevSet);
    }
    let points = grid_points(config)?;
    let base = FusionParams {
        alpha: 0.0,
        beta: 0.0,
        beam_width: config.beam_width,
        use_lm: lm.is_some(),
    };
    let score = |hyps: Vec<&str>| {
        let pairs: Vec<(&str, &str)> = dev.iter().map(|(_, r)| r.as_str()).zip(hyps).collect();
        wer(&pairs).map(|r| r.wer)
    };

    let surface = match config.mode {
        GridMode::FullRedecode => map_points(&points, config.parallel, |alpha, beta| {
            let params = base.with_weights(alpha, beta);
            let best: Vec<DecodeResult> = dev
                .iter()
                .map(|(l, _)| beam_decode(l, &params, lm, 1).map(|mut v| v.remove(0)))
                .collect::<Result<_, _>>()?;
            score(best.iter().map(|r| r.transcription.as_str()).collect())
        })?,
        GridMode::NbestRescore => {
            let nbest: Vec<Vec<DecodeResult>> = dev
                .iter()
                .map(|(l, _)| beam_decode(l, &FusionParams::no_lm(config.beam_width), None, config.n_best.max(1)))
                .collect::<Result<_, _>>()?;
            map_points(&points, config.parallel, |alpha, beta| {
                let params = base.with_weights(alpha, beta);
                let best: Vec<DecodeResult> = nbest
                    .iter()
                    .map(|list| {
                        list.iter()
                            .map(|h| rescore(h.log_pctc, h.transcription.clone(), lm, &params))
                            .min_by(ranking)
                            .expect("beam search returns at least one hypothesis")
                    })
                    .collect();
                score(best.iter().map(|r| r.transcription.as_str()).collect())
            })?
        }
    };

    let best = *surface
        .iter()
        .reduce(|a, b| if b.wer < a.wer { b } else { a })
        .expect("grid has at least one point");
    Ok(GridSearchResult {
        points: surface,
        best,
        mode: config.mode,
    })
}
