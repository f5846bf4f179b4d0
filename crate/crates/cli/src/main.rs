//! `tandem` command-line interface.
//!
//! Exit codes: 0 success, 1 indexing or retrieval failure, 2 usage, I/O,
//! configuration or index-file errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use tandem::backends::{BackendsConfig, EntityExtractor};
use tandem::chunker::{ChunkConfig, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
use tandem::eval::{evaluate, parse_qa, Retrieved};
use tandem::graph::NounLexicon;
use tandem::persistence::{self, BuildParams, BuildStats, FORMAT_VERSION};
use tandem::pipeline::{build_index, Backends, Engine, IndexOptions, QueryOutput, StageTimings};
use tandem::query::{ModeOverride, QueryOptions, DEFAULT_HOPS, DEFAULT_K, DEFAULT_LOOP_THRESHOLD};
use tandem::scaling::{self, DEFAULT_SIZES};
use tandem::tree::{TreeConfig, DEFAULT_GROUP_SIZE};
use tandem::Error;

#[derive(Parser)]
#[command(name = "tandem", version, about = "Summary-tree and entity-graph retrieval over long documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index file from a UTF-8 text document.
    Index(IndexArgs),
    /// Retrieve context for one question or a batch of questions.
    Query(QueryArgs),
    /// Score retrieval against a JSON-lines QA file.
    Eval(EvalArgs),
    /// Measure indexing-time scaling, or describe an existing index.
    Stats(StatsArgs),
}

#[derive(Args)]
struct ChunkArgs {
    /// Tokens per chunk.
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
    /// Tokens shared by consecutive chunks.
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    overlap: usize,
    /// Summary-tree group size.
    #[arg(short = 'g', long = "group-size", default_value_t = DEFAULT_GROUP_SIZE)]
    group_size: usize,
    /// Keep summarizing until a single root remains.
    #[arg(long)]
    build_to_root: bool,
}

impl ChunkArgs {
    fn options(&self) -> Result<IndexOptions, Error> {
        let options = IndexOptions {
            chunk: ChunkConfig::new(self.chunk_size, self.overlap)?,
            tree: TreeConfig {
                group_size: self.group_size,
                build_to_root: self.build_to_root,
                ..TreeConfig::default()
            },
        };
        options.tree.validate()?;
        Ok(options)
    }
}

#[derive(Args)]
struct IndexArgs {
    /// Document to index.
    input: PathBuf,
    /// Index file to write (conventionally `*.e2idx`).
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    chunking: ChunkArgs,
    /// Common nouns to treat as entities, one per line.
    #[arg(long)]
    noun_lexicon: Option<PathBuf>,
    /// TOML file selecting summarizer, embedder and extractor backends.
    #[arg(long)]
    backend_config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Dense,
}

#[derive(Args)]
struct RetrievalArgs {
    /// Chunks or nodes to return.
    #[arg(short, default_value_t = DEFAULT_K)]
    k: usize,
    /// Maximum graph distance between paired query entities.
    #[arg(long, default_value_t = DEFAULT_HOPS)]
    hop: usize,
    /// Candidate count above which the hop limit is tightened.
    #[arg(long, default_value_t = DEFAULT_LOOP_THRESHOLD)]
    threshold: usize,
    /// `dense` always uses embedding similarity over the tree.
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    #[arg(long)]
    backend_config: Option<PathBuf>,
}

impl RetrievalArgs {
    fn options(&self) -> QueryOptions {
        QueryOptions {
            k: self.k,
            hops: self.hop,
            loop_threshold: self.threshold,
            mode: match self.mode {
                Mode::Auto => ModeOverride::Auto,
                Mode::Dense => ModeOverride::Dense,
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct QueryArgs {
    index: PathBuf,
    #[arg(required_unless_present = "batch", conflicts_with = "batch")]
    question: Option<String>,
    /// File with one question per line; prints one result per question.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// `text` prints only the formatted context.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    retrieval: RetrievalArgs,
}

#[derive(Args)]
struct EvalArgs {
    index: PathBuf,
    /// JSON-lines QA file.
    qa: PathBuf,
    /// Include a result entry for every question.
    #[arg(long)]
    per_item: bool,
    #[command(flatten)]
    retrieval: RetrievalArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// Print the parameters and counts stored in this index instead of
    /// running the scaling sweep.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Document sizes in tokens, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    sizes: Vec<usize>,
    /// Builds per size; the median time is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 5)]
    seed: u64,
    #[command(flatten)]
    chunking: ChunkArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::InvalidConfig(_)
        | Error::InvalidChunkConfig { .. }
        | Error::CorruptIndex(_)
        | Error::VersionMismatch { .. } => 2,
        _ => 1,
    }
}

fn emit(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn emit_json(value: &impl Serialize) -> Result<(), Error> {
    let line = serde_json::to_string(value).expect("output types serialize");
    emit(&(line + "\n"))
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn backend_config(path: Option<&Path>) -> Result<BackendsConfig, Error> {
    match path {
        Some(p) => BackendsConfig::load(p),
        None => Ok(BackendsConfig::default()),
    }
}

#[derive(Serialize)]
struct IndexReport<'a> {
    schema: &'static str,
    input: &'a Path,
    output: &'a Path,
    format_version: u32,
    params: &'a BuildParams,
    stats: &'a BuildStats,
    planned_summarizer_calls: usize,
    timings: StageTimings,
}

fn cmd_index(args: &IndexArgs) -> Result<(), Error> {
    let options = args.chunking.options()?;
    let config = backend_config(args.backend_config.as_deref())?;
    let lexicon = match &args.noun_lexicon {
        Some(p) => NounLexicon::load(p)?,
        None => NounLexicon::default(),
    };
    let text = read_text(&args.input)?;
    let summarizer = config.summarizer.build_summarizer()?;
    let embedder = config.embedder.build_embedder()?;
    let extractor = config.extractor.build(lexicon.clone())?;
    let backends = Backends {
        summarizer: &*summarizer,
        embedder: &*embedder,
        extractor: &*extractor,
        lexicon: lexicon.terms(),
    };
    let provenance = args.input.display().to_string();
    let out = build_index(&text, &provenance, options, &backends)?;
    persistence::save(&out.artifact, &args.out)?;
    let a = &out.artifact;
    eprintln!(
        "indexed {} tokens: {} chunks, {} summaries, {} entities, {} edges -> {}",
        a.stats.token_count,
        a.stats.chunk_count,
        a.stats.summary_count,
        a.stats.vertex_count,
        a.stats.edge_count,
        args.out.display()
    );
    emit_json(&IndexReport {
        schema: "tandem.index/1",
        input: &args.input,
        output: &args.out,
        format_version: FORMAT_VERSION,
        params: &a.params,
        stats: &a.stats,
        planned_summarizer_calls: options.tree.planned_calls(a.stats.chunk_count),
        timings: out.timings,
    })
}

fn open_engine(index: &Path, config: Option<&Path>) -> Result<Engine, Error> {
    let config = backend_config(config)?;
    let artifact = persistence::load(index)?;
    let embedder = config.embedder.build_embedder()?;
    let extractor: Arc<dyn EntityExtractor> = config
        .extractor
        .build(NounLexicon::new(&artifact.params.lexicon))?;
    Engine::new(artifact, embedder, extractor)
}

#[derive(Serialize)]
struct QueryReport<'a> {
    schema: &'static str,
    #[serde(flatten)]
    output: &'a QueryOutput,
}

fn cmd_query(args: &QueryArgs) -> Result<(), Error> {
    let options = args.retrieval.options();
    options.validate()?;
    let questions: Vec<String> = match (&args.question, &args.batch) {
        (Some(q), _) => vec![q.clone()],
        (None, Some(path)) => read_text(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
        (None, None) => unreachable!("clap requires a question or --batch"),
    };
    let engine = open_engine(&args.index, args.retrieval.backend_config.as_deref())?;
    let outputs = questions
        .par_iter()
        .map(|q| engine.query(q, options))
        .collect::<Result<Vec<_>, _>>()?;
    for o in &outputs {
        match args.format {
            Format::Json => emit_json(&QueryReport {
                schema: "tandem.query/1",
                output: o,
            })?,
            Format::Text if args.batch.is_some() => emit(&format!("# {}\n{}\n", o.question, o.formatted))?,
            Format::Text => emit(&o.formatted)?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    schema: &'static str,
    index: &'a Path,
    qa: &'a Path,
    options: QueryOptions,
    #[serde(flatten)]
    report: tandem::eval::EvalReport,
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let options = args.retrieval.options();
    options.validate()?;
    let engine = open_engine(&args.index, args.retrieval.backend_config.as_deref())?;
    let (items, skipped) = parse_qa(&read_text(&args.qa)?);
    for s in &skipped {
        eprintln!("warning: {}:{}: skipped: {}", args.qa.display(), s.line, s.reason);
    }
    let mut report = evaluate(&items, skipped, |q| {
        let o = engine.query(q, options)?;
        Ok(Retrieved {
            mode: o.mode,
            context: o.formatted,
            retrieval_ms: o.retrieval_ms,
        })
    })?;
    if !args.per_item {
        report.results.clear();
    }
    emit_json(&EvalOutput {
        schema: "tandem.eval/1",
        index: &args.index,
        qa: &args.qa,
        options,
        report,
    })
}

#[derive(Serialize)]
struct IndexInfo<'a> {
    schema: &'static str,
    index: &'a Path,
    format_version: u32,
    params: BuildParams,
    stats: BuildStats,
}

#[derive(Serialize)]
struct ScalingOutput {
    schema: &'static str,
    seed: u64,
    repeats: usize,
    #[serde(flatten)]
    report: scaling::ScalingReport,
}

fn cmd_stats(args: &StatsArgs) -> Result<(), Error> {
    if let Some(path) = &args.index {
        let a = persistence::load(path)?;
        return emit_json(&IndexInfo {
            schema: "tandem.index-info/1",
            index: path,
            format_version: FORMAT_VERSION,
            params: a.params,
            stats: a.stats,
        });
    }
    if args.sizes.len() < 2 || args.repeats == 0 {
        return Err(Error::InvalidConfig("need at least two sizes and one repeat".into()));
    }
    let report = scaling::measure(&args.sizes, args.repeats, args.seed, args.chunking.options()?)?;
    emit_json(&ScalingOutput {
        schema: "tandem.scaling/1",
        seed: args.seed,
        repeats: args.repeats,
        report,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Query(a) => cmd_query(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string();
            eprintln!("error: {message}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let cause = s.to_string();
                if !message.contains(&cause) {
                    eprintln!("  caused by: {cause}");
                }
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
