//! The `ctcfuse` command line. Each subcommand wraps one library
//! operation; errors map to exit codes 1 (usage), 2 (input) and 3
//! (internal).

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ctcfuse::corpus::{build_counts, build_vocab, clean_stream, normalize_tokens, AbbreviationTable, CleaningConfig, CountTable, Vocabulary, DEFAULT_MIN_COUNT};
use ctcfuse::correction::{build_inventory, capitalize, correct_unknown, restore_hyphens, NameList, UnknownConfig};
use ctcfuse::eval::{grid_search, load_dev_set, wer, GridConfig, GridMode};
use ctcfuse::lm::{load_arpa_file, save_arpa, train, TrainConfig};
use ctcfuse::{beam_decode, load_rlat, save_rlat, synth_lattice, Alphabet, FusionParams};
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::chain::{ChainClient, Endpoints};
use crate::config::ServiceConfig;
use crate::http::deploy;
use crate::pipeline::{ChainInput, Models};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }
}

/// One line: `error[kind]: message`, with newlines flattened.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Usage(m) | CliError::Input(m) | CliError::Internal(m)) = self;
        write!(f, "error[{}]: {}", self.kind(), m.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

fn input_err(context: impl fmt::Display) -> impl FnOnce(&dyn fmt::Display) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| input_err(path.display())(&e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read_file(path)?).map_err(|e| input_err(path.display())(&e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn io_internal(e: io::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| input_err(p.display())(&e))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Internal(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// All lines of `path` (or stdin) as UTF-8.
fn read_lines(path: Option<&Path>) -> Result<Vec<String>, CliError> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.map_or("<stdin>".into(), |p| p.display().to_string()))))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn gzip(bytes: &[u8]) -> Result<Vec<u8>, CliError> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(bytes).map_err(io_internal)?;
    enc.finish().map_err(io_internal)
}

/// Writes an ARPA file, gzip-compressed when the name ends in `.gz`.
fn write_arpa(path: &Path, text: &str) -> Result<(), CliError> {
    let bytes = if path.extension().is_some_and(|e| e == "gz") {
        gzip(text.as_bytes())?
    } else {
        text.as_bytes().to_vec()
    };
    write_file(path, &bytes)
}

fn load_lm(path: &Path) -> Result<ctcfuse::NGramModel, CliError> {
    load_arpa_file(path).map_err(|e| input_err(path.display())(&e))
}

#[derive(Debug, Parser)]
#[command(name = "ctcfuse", version, about = "CTC decoding with n-gram shallow fusion, text correction and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter raw corpus lines (stdin to stdout when paths are omitted).
    CleanCorpus(CleanCorpusArgs),
    /// Count normalized tokens and write a `word TAB count` vocabulary.
    BuildVocab(BuildVocabArgs),
    /// Write unigram and bigram counts of a corpus as TSV.
    BuildCounts(BuildCountsArgs),
    /// Train an interpolated modified Kneser-Ney model and save it as ARPA.
    TrainLm(TrainLmArgs),
    /// Load an ARPA file (plain or gzip) and write it back out.
    ArpaConvert(ArpaConvertArgs),
    /// Write a synthetic RLAT lattice for a text.
    GenLattice(GenLatticeArgs),
    /// Beam-decode a lattice or every lattice of a manifest.
    Decode(DecodeArgs),
    /// Restore hyphens and capitalize names, one line at a time.
    CorrectHyphen(CorrectHyphenArgs),
    /// Replace out-of-vocabulary words, one line at a time.
    CorrectUnknown(CorrectUnknownArgs),
    /// Corpus WER of line-aligned reference and hypothesis files.
    Wer(WerArgs),
    /// Grid search over alpha and beta on a development manifest.
    Tune(TuneArgs),
    /// Run the transcription, hyphen and unknown-word services.
    Serve(ServeArgs),
    /// Send one input through the running services.
    Chain(ChainArgs),
}

#[derive(Debug, Args)]
pub struct CleanCorpusArgs {
    /// Raw corpus; stdin when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Cleaned corpus; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `abbreviation TAB expansion` table.
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    /// Shortest kept line, in characters.
    #[arg(long, default_value_t = 20)]
    pub min_chars: usize,
    /// Longest kept line, in characters.
    #[arg(long, default_value_t = 2000)]
    pub max_chars: usize,
    /// Keep lines without Romanian diacritics.
    #[arg(long)]
    pub keep_no_diacritics: bool,
    /// Keep lines containing URLs.
    #[arg(long)]
    pub keep_urls: bool,
    /// Keep lines containing digits.
    #[arg(long)]
    pub keep_digits: bool,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    /// Corpus, one sentence per line; stdin when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Vocabulary TSV; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Minimum count for membership (all counts are written).
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
}

#[derive(Debug, Args)]
pub struct BuildCountsArgs {
    /// Corpus, one sentence per line; stdin when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Count TSV; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    /// Corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// ARPA output; gzip-compressed when it ends in `.gz`.
    #[arg(long)]
    pub output: PathBuf,
    /// N-gram order, 1 to 5.
    #[arg(long, default_value_t = 5)]
    pub order: usize,
    /// Words seen fewer times become `<unk>`.
    #[arg(long, default_value_t = 1)]
    pub unk_threshold: u64,
}

#[derive(Debug, Args)]
pub struct ArpaConvertArgs {
    /// ARPA input, plain or gzip.
    #[arg(long)]
    pub input: PathBuf,
    /// ARPA output; gzip-compressed when it ends in `.gz`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenLatticeArgs {
    /// Text to encode.
    #[arg(long)]
    pub text: String,
    /// RLAT output.
    #[arg(long)]
    pub output: PathBuf,
    /// Frames per label.
    #[arg(long, default_value_t = 2)]
    pub frames_per_label: usize,
    /// Probability mass moved off the target label in every frame.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Seed for the spread of the confusion mass.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    /// ARPA language model (plain or gzip); decoding is acoustic-only without it.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    /// Language model weight.
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    /// Word insertion bonus.
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    /// Prefixes kept per frame.
    #[arg(long, default_value_t = 128)]
    pub beam_width: usize,
    /// Ignore --lm, alpha and beta.
    #[arg(long)]
    pub no_lm: bool,
}

impl FusionArgs {
    fn load(&self) -> Result<(FusionParams, Option<ctcfuse::NGramModel>), CliError> {
        let lm = match (&self.lm, self.no_lm) {
            (Some(p), false) => Some(load_lm(p)?),
            _ => None,
        };
        let params = FusionParams {
            alpha: self.alpha,
            beta: self.beta,
            beam_width: self.beam_width,
            use_lm: lm.is_some(),
        };
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok((params, lm))
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["lattice", "manifest"]))]
pub struct DecodeArgs {
    /// RLAT lattice.
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    /// `lattice-path TAB reference` manifest; prints one line per entry
    /// and the corpus WER on stderr.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub fusion: FusionArgs,
    /// Hypotheses to print per lattice, as `score TAB text` when above 1.
    #[arg(long, default_value_t = 1)]
    pub n_best: usize,
}

#[derive(Debug, Args)]
pub struct TextInput {
    /// Text to correct; otherwise lines from --input or stdin.
    #[arg(long)]
    pub text: Option<String>,
    /// Input file, one text per line.
    #[arg(long, conflicts_with = "text")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print change comments on stderr.
    #[arg(long)]
    pub comments: bool,
}

impl TextInput {
    fn lines(&self) -> Result<Vec<String>, CliError> {
        match &self.text {
            Some(t) => Ok(vec![t.clone()]),
            None => read_lines(self.input.as_deref()),
        }
    }
}

#[derive(Debug, Args)]
pub struct CorrectHyphenArgs {
    /// Unigram and bigram count TSV.
    #[arg(long)]
    pub counts: PathBuf,
    /// Name list files, one name per line; repeatable.
    #[arg(long)]
    pub names: Vec<PathBuf>,
    /// Also capitalize the first word.
    #[arg(long)]
    pub sentence_start: bool,
    #[command(flatten)]
    pub io: TextInput,
}

#[derive(Debug, Args)]
pub struct CorrectUnknownArgs {
    /// Unigram and bigram count TSV.
    #[arg(long)]
    pub counts: PathBuf,
    /// Vocabulary TSV; derived from the counts when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Minimum count for vocabulary membership.
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    /// Candidates must be closer than this edit distance.
    #[arg(long, default_value_t = 3)]
    pub tau: usize,
    #[command(flatten)]
    pub io: TextInput,
}

#[derive(Debug, Args)]
pub struct WerArgs {
    /// Reference transcriptions, one per line.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Hypotheses, line-aligned with the references.
    #[arg(long)]
    pub hyp: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Development manifest (`lattice-path TAB reference`).
    #[arg(long)]
    pub dev: PathBuf,
    /// ARPA language model.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    /// `full` re-decodes at every point, `nbest` rescores one n-best list.
    #[arg(long, default_value = "full")]
    pub mode: GridMode,
    /// CSV surface (`alpha,beta,wer`); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub beta_max: f64,
    /// Grid step for both axes.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 128)]
    pub beam_width: usize,
    /// Hypotheses kept per utterance in nbest mode.
    #[arg(long, default_value_t = 16)]
    pub n_best: usize,
    /// Evaluate grid points on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service configuration file.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["wav", "lattice"]))]
pub struct ChainArgs {
    /// Service configuration file (addresses and skip threshold).
    #[arg(long)]
    pub config: PathBuf,
    /// WAV input (mono, 16-bit, 16 kHz).
    #[arg(long)]
    pub wav: Option<PathBuf>,
    /// RLAT input.
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    /// Print every stage's output on stderr.
    #[arg(long)]
    pub verbose: bool,
}

/// Parses `args` and runs the command. Help and version requests are
/// returned as `Ok` with the text to print.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::Usage(first.trim_start_matches("error: ").to_owned()));
        }
    };
    execute(cli.command)
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::CleanCorpus(a) => clean_corpus(a),
        Command::BuildVocab(a) => {
            let lines = read_lines(a.input.as_deref())?;
            let vocab = build_vocab(lines.iter().flat_map(|l| normalize_tokens(l)), a.min_count);
            emit(a.output.as_deref(), vocab.to_tsv().as_bytes())
        }
        Command::BuildCounts(a) => {
            let lines = read_lines(a.input.as_deref())?;
            let counts = build_counts(lines.iter().map(|l| normalize_tokens(l)));
            emit(a.output.as_deref(), counts.to_tsv().as_bytes())
        }
        Command::TrainLm(a) => {
            let lines: Vec<Vec<String>> = read_lines(Some(&a.input))?.iter().map(|l| normalize_tokens(l)).collect();
            let config = TrainConfig {
                order: a.order,
                unk_threshold: a.unk_threshold,
            };
            let (model, report) = train(&lines, &config).map_err(|e| CliError::Input(e.to_string()))?;
            write_arpa(&a.output, &save_arpa(&model))?;
            eprintln!(
                "trained order-{} model on {} sentences, {} tokens; degenerate orders: {:?}",
                model.order(),
                report.sentences,
                report.tokens,
                report.degenerate_orders
            );
            Ok(())
        }
        Command::ArpaConvert(a) => write_arpa(&a.output, &save_arpa(&load_lm(&a.input)?)),
        Command::GenLattice(a) => {
            let l = synth_lattice(&a.text, &Alphabet::romanian(), a.frames_per_label, a.epsilon, a.seed)
                .map_err(|e| CliError::Input(e.to_string()))?;
            write_file(&a.output, &save_rlat(&l))
        }
        Command::Decode(a) => decode(a),
        Command::CorrectHyphen(a) => {
            let counts = load_counts(&a.counts)?;
            let inventory = build_inventory(&counts);
            let mut names = NameList::default();
            for p in &a.names {
                names.extend_from(&read_text(p)?);
            }
            correct_lines(&a.io, |line| {
                let restored = restore_hyphens(&normalize_tokens(line), &inventory, &counts);
                (capitalize(&restored.tokens, &names, a.sentence_start).join(" "), restored.comments)
            })
        }
        Command::CorrectUnknown(a) => {
            let counts = load_counts(&a.counts)?;
            let vocab = match &a.vocab {
                Some(p) => Vocabulary::from_tsv(&read_text(p)?, a.min_count).map_err(|e| input_err(p.display())(&e))?,
                None => Vocabulary::from_counts(&counts, a.min_count),
            };
            if a.tau == 0 {
                return Err(CliError::Usage("--tau must be at least 1".into()));
            }
            let config = UnknownConfig { tau: a.tau };
            correct_lines(&a.io, |line| {
                let c = correct_unknown(&normalize_tokens(line), &vocab, &counts, config);
                (c.text(), c.comments)
            })
        }
        Command::Wer(a) => {
            let refs = read_lines(Some(&a.reference))?;
            let hyps = read_lines(Some(&a.hyp))?;
            if refs.len() != hyps.len() {
                return Err(CliError::Input(format!(
                    "{} reference lines but {} hypothesis lines",
                    refs.len(),
                    hyps.len()
                )));
            }
            let pairs: Vec<(&String, &String)> = refs.iter().zip(&hyps).collect();
            let report = wer(&pairs).map_err(|e| CliError::Input(e.to_string()))?;
            println!("{report}");
            Ok(())
        }
        Command::Tune(a) => tune(a),
        Command::Serve(a) => serve(a),
        Command::Chain(a) => chain(a),
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    out.write_all(bytes).and_then(|_| out.flush()).map_err(io_internal)
}

fn load_counts(path: &Path) -> Result<CountTable, CliError> {
    CountTable::from_tsv(&read_text(path)?).map_err(|e| input_err(path.display())(&e))
}

fn correct_lines<F>(io: &TextInput, f: F) -> Result<(), CliError>
where
    F: Fn(&str) -> (String, Vec<String>),
{
    let mut out = String::new();
    for line in io.lines()? {
        let (text, comments) = f(&line);
        out.push_str(&text);
        out.push('\n');
        if io.comments {
            for c in comments {
                eprintln!("{c}");
            }
        }
    }
    emit(io.output.as_deref(), out.as_bytes())
}

fn clean_corpus(a: CleanCorpusArgs) -> Result<(), CliError> {
    let abbreviations = match &a.abbreviations {
        Some(p) => AbbreviationTable::parse_tsv(&read_text(p)?).map_err(|e| input_err(p.display())(&e))?,
        None => AbbreviationTable::new(),
    };
    let config = CleaningConfig {
        min_line_chars: a.min_chars,
        max_line_chars: a.max_chars,
        drop_no_diacritics: !a.keep_no_diacritics,
        drop_urls: !a.keep_urls,
        drop_digit_lines: !a.keep_digits,
        abbreviations,
    };
    let stats = clean_stream(open_input(a.input.as_deref())?, open_output(a.output.as_deref())?, &config)
        .map_err(io_internal)?;
    eprintln!("{stats}");
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<(), CliError> {
    let (params, lm) = a.fusion.load()?;
    let n_best = a.n_best.max(1);
    let dev = match (&a.lattice, &a.manifest) {
        (Some(p), _) => vec![(load_rlat(&read_file(p)?).map_err(|e| input_err(p.display())(&e))?, None)],
        (None, Some(m)) => load_dev_set(m)
            .map_err(|e| CliError::Input(e.to_string()))?
            .into_iter()
            .map(|(l, r)| (l, Some(r)))
            .collect(),
        (None, None) => return Err(CliError::Usage("one of --lattice or --manifest is required".into())),
    };
    let mut out = String::new();
    let mut pairs = Vec::new();
    for (lattice, reference) in &dev {
        let results = beam_decode(lattice, &params, lm.as_ref(), n_best).map_err(|e| CliError::Input(e.to_string()))?;
        if n_best == 1 {
            out.push_str(&results[0].transcription);
            out.push('\n');
        } else {
            for r in &results {
                out.push_str(&format!("{:.6}\t{}\n", r.q_score, r.transcription));
            }
        }
        if let Some(r) = reference {
            pairs.push((r.clone(), results[0].transcription.clone()));
        }
    }
    emit(None, out.as_bytes())?;
    if !pairs.is_empty() {
        match wer(&pairs) {
            Ok(report) => eprintln!("{report}"),
            Err(e) => eprintln!("WER unavailable: {e}"),
        }
    }
    Ok(())
}

fn tune(a: TuneArgs) -> Result<(), CliError> {
    let dev = load_dev_set(&a.dev).map_err(|e| CliError::Input(e.to_string()))?;
    let lm = a.lm.as_deref().map(load_lm).transpose()?;
    let config = GridConfig {
        alpha: (a.alpha_min, a.alpha_max),
        beta: (a.beta_min, a.beta_max),
        step: a.step,
        beam_width: a.beam_width,
        n_best: a.n_best,
        mode: a.mode,
        parallel: !a.serial,
    };
    let result = grid_search(&dev, lm.as_ref(), &config).map_err(|e| CliError::Input(e.to_string()))?;
    emit(a.output.as_deref(), result.to_csv().as_bytes())?;
    let best = format!(
        "best alpha={:.1} beta={:.1} wer={:.4} ({} points, mode {})",
        result.best.alpha,
        result.best.beta,
        result.best.wer,
        result.points.len(),
        result.mode.name()
    );
    if a.output.is_some() {
        println!("{best}");
    } else {
        eprintln!("{best}");
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_internal)
}

fn load_config(path: &Path) -> Result<ServiceConfig, CliError> {
    ServiceConfig::load(path).map_err(|e| input_err(path.display())(&e))
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let config = load_config(&a.config)?;
    let models = Arc::new(Models::load(&config).map_err(|e| CliError::Input(e.to_string()))?);
    runtime()?.block_on(async move {
        let d = deploy(models, [config.transcribe_addr, config.hyphen_addr, config.unknown_addr])
            .await
            .map_err(|e| CliError::Internal(format!("bind failed: {e}")))?;
        eprintln!(
            "transcribe on {}, hyphen on {}, unknown on {}",
            d.transcribe.addr, d.hyphen.addr, d.unknown.addr
        );
        let result = tokio::select! {
            r = d.transcribe.join() => r,
            r = d.hyphen.join() => r,
            r = d.unknown.join() => r,
        };
        result.map_err(|e| CliError::Internal(format!("server stopped: {e}")))
    })
}

fn chain(a: ChainArgs) -> Result<(), CliError> {
    let config = load_config(&a.config)?;
    let input = match (&a.wav, &a.lattice) {
        (Some(p), _) => ChainInput::Wav(read_file(p)?),
        (None, Some(p)) => ChainInput::Lattice(read_file(p)?),
        (None, None) => return Err(CliError::Usage("one of --wav or --lattice is required".into())),
    };
    let client = ChainClient::new(
        Endpoints {
            transcribe: format!("http://{}", config.transcribe_addr),
            hyphen: format!("http://{}", config.hyphen_addr),
            unknown: format!("http://{}", config.unknown_addr),
        },
        config.skip_threshold,
    );
    let output = runtime()?.block_on(client.run(&input)).map_err(|e| match e.http_status {
        Some(400) | Some(413) => CliError::Input(e.to_string()),
        _ => CliError::Internal(e.to_string()),
    })?;
    if a.verbose {
        eprintln!("transcribe: {}", output.transcription);
        match &output.hyphen {
            Some(c) => eprintln!("hyphen: {} {:?}", c.text, c.comments),
            None => eprintln!("hyphen: skipped"),
        }
        eprintln!("unknown: {} {:?}", output.unknown.text, output.unknown.comments);
    }
    println!("{}", output.text());
    Ok(())
}
