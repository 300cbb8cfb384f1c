//! `npchunk`: train a chunk model from SUSANNE-format treebanks, chunk
//! tagged text, extract noun phrases, and evaluate against parse fields.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use config::Config;
use npchunk::chunker::{
    chunk_sentence, parse_chunked_text, render_chunked_sentence, single_token_chunks,
    ChunkSequence, Scorer,
};
use npchunk::corpus::{
    detect_format, parse_susanne_stream, read_vertical_tagged, records_to_sentence, InputFormat,
    SusanneRecord, TagMap, TaggedSentence,
};
use npchunk::error::Error;
use npchunk::eval::NpPredicate;
use npchunk::fsm::{extract_noun_phrases, render_np_sentence, NpSpanRecord};
use npchunk::grammar::{GrammarModel, TrainingCounts, DEFAULT_CHUNK_LEN_CAP};
use npchunk::heads::assign_heads_sequence;
use npchunk::pipeline::{evaluate_groups, stats_groups, Stages};

#[derive(Parser)]
#[command(name = "npchunk", version, about = "statistical chunker and noun-phrase extractor")]
struct Cli {
    /// Configuration file (key=value); defaults to $NP_CHUNKER_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Susanne,
    Vertical,
    Chunked,
}

#[derive(Subcommand)]
enum Command {
    /// Train a chunk model from SUSANNE files or directories.
    Train {
        /// SUSANNE files or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Model file to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Chunk length cap for rule extraction (default 6).
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Chunk tagged text and print bracketed chunks.
    Chunk {
        input: PathBuf,
        /// Model file (falls back to the config's model).
        #[arg(short, long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        /// Override the candidate chunk length cap.
        #[arg(long)]
        cap: Option<usize>,
        /// Additive smoothing (0 = pure maximum likelihood).
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Extract noun phrases (bracketed text, optionally a JSON span list).
    ExtractNp {
        input: PathBuf,
        /// Optional model; without one, chunks are single tokens.
        #[arg(short, long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write span records as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Evaluate the pipeline against SUSANNE parse fields.
    Evaluate {
        input: PathBuf,
        #[arg(short, long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// json or text (default json).
        #[arg(long)]
        report_format: Option<String>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Gold-side noun-phrase taxonomy counts of a treebank.
    Stats {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report_format: Option<String>,
    },
}

enum AppError {
    Usage(String),
    Core(Error),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Core(e)
    }
}

type AppResult<T> = Result<T, AppError>;

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("npchunk: E_USAGE: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Core(e)) => {
            eprintln!("npchunk: {}: {e}", e.code());
            let code = match e {
                Error::Validation(_) | Error::Domain(_) => 4,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> AppResult<()> {
    let cfg = Config::from_env_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::Train { inputs, output, cap } => train(&cfg, &inputs, &output, cap),
        Command::Chunk { input, model, output, format, cap, epsilon } => {
            chunk_cmd(&cfg, &input, model, output, format, cap, epsilon)
        }
        Command::ExtractNp { input, model, output, json, format, cap, epsilon } => {
            extract_cmd(&cfg, &input, model, output, json, format, cap, epsilon)
        }
        Command::Evaluate { input, model, output, report_format, cap, epsilon } => {
            evaluate_cmd(&cfg, &input, model, output, report_format, cap, epsilon)
        }
        Command::Stats { input, output, report_format } => {
            stats_cmd(&cfg, &input, output, report_format)
        }
    }
}

/// Writes through a temp file in the target directory and renames into
/// place, so failed runs never leave partial artifacts.
fn write_atomic(path: &Path, content: &str) -> Result<(), Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(output: Option<&Path>, content: &str) -> Result<(), Error> {
    match output {
        Some(path) => write_atomic(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn collect_input_files(inputs: &[PathBuf]) -> AppResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(Error::from)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            files.extend(entries);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(usage(format!("input {} does not exist", input.display())));
        }
    }
    if files.is_empty() {
        return Err(usage("no input files found"));
    }
    Ok(files)
}

fn train(cfg: &Config, inputs: &[PathBuf], output: &Path, cap: Option<usize>) -> AppResult<()> {
    let cap = cap.or(cfg.chunk_len_cap).unwrap_or(DEFAULT_CHUNK_LEN_CAP);
    let tag_map = cfg.tag_map()?;
    let files = collect_input_files(inputs)?;

    // file-level parallelism; counts merge commutatively, in input order
    let partials: Vec<Result<(TrainingCounts, usize), Error>> = files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)?;
            let groups = parse_susanne_stream(&text)?;
            let mut counts = TrainingCounts::new();
            for group in &groups {
                let tree = npchunk::corpus::build_parse_tree(group)?;
                let sentence = records_to_sentence(group, &tag_map)?;
                counts.observe_sentence(&tree, &sentence.tokens, cap)?;
            }
            Ok((counts, groups.len()))
        })
        .collect();

    let mut counts = TrainingCounts::new();
    let mut sentences = 0usize;
    for partial in partials {
        let (c, n) = partial?;
        counts.merge(c);
        sentences += n;
    }
    let mut model = counts.fit()?;
    model.set_provenance(vec![
        ("cap".into(), cap.to_string()),
        ("files".into(), files.len().to_string()),
        ("sentences".into(), sentences.to_string()),
    ]);
    write_atomic(output, &model.to_text())?;
    eprintln!(
        "trained {} chunk rules, {} context rules from {} sentences",
        model.rule_count(),
        model.context_rule_count(),
        sentences
    );
    Ok(())
}

fn load_model(cfg: &Config, flag: Option<PathBuf>) -> AppResult<Option<GrammarModel>> {
    let path = flag.or_else(|| cfg.model.clone());
    match path {
        Some(p) => Ok(Some(GrammarModel::load(&p)?)),
        None => Ok(None),
    }
}

fn scorer_for<'m>(
    model: &'m GrammarModel,
    cfg: &Config,
    epsilon: Option<f64>,
) -> AppResult<Scorer<'m>> {
    let eps = epsilon.or(cfg.epsilon).unwrap_or(0.0);
    Ok(Scorer::with_epsilon(model, eps)?)
}

/// Reads tagged sentences from vertical or SUSANNE input.
fn read_sentences(
    path: &Path,
    format: Option<Format>,
    tag_map: &TagMap,
) -> AppResult<Vec<TaggedSentence>> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let format = resolve_format(&text, format)?;
    match format {
        Format::Vertical => Ok(read_vertical_tagged(&text)?),
        Format::Susanne => {
            let groups = parse_susanne_stream(&text)?;
            let sentences: Result<Vec<_>, Error> =
                groups.iter().map(|g| records_to_sentence(g, tag_map)).collect();
            Ok(sentences?)
        }
        Format::Chunked => Err(usage("chunked input is only accepted by extract-np")),
    }
}

fn resolve_format(text: &str, flag: Option<Format>) -> AppResult<Format> {
    if let Some(f) = flag {
        return Ok(f);
    }
    if text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with('['))
    {
        return Ok(Format::Chunked);
    }
    match detect_format(text) {
        Some(InputFormat::Susanne) => Ok(Format::Susanne),
        Some(InputFormat::Vertical) => Ok(Format::Vertical),
        None => Err(usage("cannot detect input format; pass --format")),
    }
}

fn read_susanne_groups(path: &Path) -> AppResult<Vec<Vec<SusanneRecord>>> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    Ok(parse_susanne_stream(&text)?)
}

fn chunk_cmd(
    cfg: &Config,
    input: &Path,
    model: Option<PathBuf>,
    output: Option<PathBuf>,
    format: Option<Format>,
    cap: Option<usize>,
    epsilon: Option<f64>,
) -> AppResult<()> {
    let Some(model) = load_model(cfg, model)? else {
        return Err(usage("chunk requires a model (-m or config model=...)"));
    };
    let scorer = scorer_for(&model, cfg, epsilon)?;
    let tag_map = cfg.tag_map()?;
    let sentences = read_sentences(input, format, &tag_map)?;
    let cap = cap.or(cfg.chunk_len_cap);

    let mut out = String::new();
    for sentence in &sentences {
        let seq = chunk_sentence(sentence, &scorer, cap)?;
        out.push_str(&render_chunked_sentence(&seq));
        out.push('\n');
    }
    emit(output.as_deref(), &out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn extract_cmd(
    cfg: &Config,
    input: &Path,
    model: Option<PathBuf>,
    output: Option<PathBuf>,
    json: Option<PathBuf>,
    format: Option<Format>,
    cap: Option<usize>,
    epsilon: Option<f64>,
) -> AppResult<()> {
    let tag_map = cfg.tag_map()?;
    let syn = cfg.syntactic_table()?;
    let sem = cfg.semantic_table()?;
    let fsm = cfg.fsm_spec()?;

    let text = std::fs::read_to_string(input).map_err(Error::from)?;
    let format = resolve_format(&text, format)?;

    // (sentence, chunking) pairs from any of the three input shapes
    let pairs: Vec<(TaggedSentence, ChunkSequence)> = match format {
        Format::Chunked => parse_chunked_text(&text)?,
        other => {
            let sentences = match other {
                Format::Vertical => read_vertical_tagged(&text)?,
                _ => {
                    let groups = parse_susanne_stream(&text)?;
                    let s: Result<Vec<_>, Error> =
                        groups.iter().map(|g| records_to_sentence(g, &tag_map)).collect();
                    s?
                }
            };
            let model = load_model(cfg, model)?;
            let scorer = match &model {
                Some(m) => Some(scorer_for(m, cfg, epsilon)?),
                None => None,
            };
            let cap = cap.or(cfg.chunk_len_cap);
            let mut pairs = Vec::with_capacity(sentences.len());
            for sentence in sentences {
                let seq = match &scorer {
                    Some(sc) => chunk_sentence(&sentence, sc, cap)?,
                    None => single_token_chunks(&sentence),
                };
                pairs.push((sentence, seq));
            }
            pairs
        }
    };

    let mut out = String::new();
    let mut records: Vec<NpSpanRecord> = Vec::new();
    for (idx, (sentence, seq)) in pairs.iter().enumerate() {
        let (chunks, _) = assign_heads_sequence(&seq.chunks, &syn, &sem);
        let nps = extract_noun_phrases(&chunks, &fsm);
        out.push_str(&render_np_sentence(&sentence.tokens, &nps));
        out.push('\n');
        for np in nps {
            records.push(NpSpanRecord {
                sentence: idx,
                start: np.start,
                end: np.end,
                text: np.text,
            });
        }
    }
    emit(output.as_deref(), &out)?;
    if let Some(json_path) = json {
        let body = serde_json::to_string_pretty(&records).expect("spans serialize");
        write_atomic(&json_path, &format!("{body}\n"))?;
    }
    Ok(())
}

fn predicate_for(cfg: &Config) -> NpPredicate {
    match &cfg.np_label_prefix {
        Some(prefix) => NpPredicate::with_np_prefixes(vec![prefix.clone()]),
        None => NpPredicate::default(),
    }
}

fn evaluate_cmd(
    cfg: &Config,
    input: &Path,
    model: Option<PathBuf>,
    output: Option<PathBuf>,
    report_format: Option<String>,
    cap: Option<usize>,
    epsilon: Option<f64>,
) -> AppResult<()> {
    let tag_map = cfg.tag_map()?;
    let syn = cfg.syntactic_table()?;
    let sem = cfg.semantic_table()?;
    let fsm = cfg.fsm_spec()?;
    let groups = read_susanne_groups(input)?;

    let model = load_model(cfg, model)?;
    let scorer = match &model {
        Some(m) => Some(scorer_for(m, cfg, epsilon)?),
        None => None,
    };
    let stages = Stages {
        scorer: scorer.as_ref(),
        cap: cap.or(cfg.chunk_len_cap),
        syntactic: &syn,
        semantic: &sem,
        fsm: &fsm,
    };
    let report = evaluate_groups(&groups, &tag_map, &stages, &predicate_for(cfg))?;
    let rendered = render_report(&report, report_format.or_else(|| cfg.report_format.clone()))?;
    emit(output.as_deref(), &rendered)?;
    Ok(())
}

fn stats_cmd(
    cfg: &Config,
    input: &Path,
    output: Option<PathBuf>,
    report_format: Option<String>,
) -> AppResult<()> {
    let tag_map = cfg.tag_map()?;
    let groups = read_susanne_groups(input)?;
    let report = stats_groups(&groups, &tag_map, &predicate_for(cfg))?;
    let rendered = render_report(&report, report_format.or_else(|| cfg.report_format.clone()))?;
    emit(output.as_deref(), &rendered)?;
    Ok(())
}

fn render_report(
    report: &npchunk::eval::EvalReport,
    format: Option<String>,
) -> AppResult<String> {
    match format.as_deref().unwrap_or("json") {
        "json" => Ok(format!("{}\n", report.to_json())),
        "text" => Ok(report.to_text()),
        other => Err(usage(format!("unknown report format {other:?}"))),
    }
}
