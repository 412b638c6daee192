//! The `skx` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 data or validation, 3 remote service.
//! Every output file gets a `<output>.run.json` sidecar holding the tool
//! version, subcommand, seed and settings.

use std::collections::{HashMap, HashSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::clustering::KMeansConfig;
use crate::corpus::{
    corpus_stats, read_corpus, read_extracted, read_jsonl, JsonlWriter, LengthStats,
};
use crate::embedding::{load_embedding_file, EmbeddingProvider, HttpProvider};
use crate::error::{Error, Result};
use crate::extractor::{document_sentences, extract_corpus, record_documents, ExtractConfig};
use crate::gen_client::{
    export_finetune_dataset, GenClient, GenerationRequest, DEFAULT_MAX_NEW_TOKENS,
};
use crate::rouge::{score_pair, RecordScores, RougeReport, RougeScores};
use crate::textproc::{count_tokens, SentenceSplitter};

#[derive(Debug, Parser)]
#[command(
    name = "skx",
    version,
    about = "Silhouette k-means extraction and ROUGE evaluation"
)]
pub struct Cli {
    /// Worker threads for every pool [default: available parallelism].
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Omit timestamps so reruns produce byte-identical files.
    #[arg(long, global = true)]
    pub deterministic: bool,

    /// Log filter, e.g. `info` or `skx=debug`.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select centroid sentences from every document of a corpus.
    Extract(ExtractArgs),
    /// Score candidates against references with ROUGE-1/2/L/LSum.
    Evaluate(EvaluateArgs),
    /// Write fine-tuning pairs of extract and gold target.
    ExportFt(ExportArgs),
    /// Request abstractive summaries from a generation service.
    Summarize(SummarizeArgs),
    /// Print token-length statistics for a corpus.
    Stats(StatsArgs),
    /// Write every unique segmented sentence, one `{"text"}` object per line.
    Sentences(SentencesArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Embedding file keyed by sentence text.
    #[arg(
        long,
        conflicts_with = "embed_url",
        required_unless_present = "embed_url"
    )]
    pub embeddings: Option<PathBuf>,
    /// Base URL of an embedding service.
    #[arg(long)]
    pub embed_url: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub kmin: usize,
    #[arg(long, default_value_t = 0.5)]
    pub kmax_ratio: f64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long)]
    pub normalize_embeddings: bool,
    /// Keep `@cite_N` markers instead of rewriting them to `cite`.
    #[arg(long)]
    pub keep_cite_markers: bool,
    /// Abbreviation guard list, one entry per line.
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    /// Process only the first N records.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Records processed per parallel chunk.
    #[arg(long, default_value_t = 256)]
    pub chunk_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Lines with `record_id` and one of `summaries`, `extract_text`, `text`.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Lines with `record_id` and one of `related_work`, `target`, `text`.
    #[arg(long)]
    pub references: PathBuf,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub stemmer: Switch,
    /// Write the JSON report here; the summary table always goes to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub extracted: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub extracted: PathBuf,
    #[arg(long)]
    pub gen_url: String,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_NEW_TOKENS)]
    pub max_new_tokens: usize,
    /// Forwarded to the server; omitted when unset.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Also report the extracted-text distribution.
    #[arg(long)]
    pub extracted: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub bucket_width: usize,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SentencesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    #[arg(long)]
    pub keep_cite_markers: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_REMOTE: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_remote() {
        EXIT_REMOTE
    } else if matches!(err, Error::Config(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("skx: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let workers = match cli.workers {
        Some(0) => return Err(Error::Config("--workers must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let ctx = RunContext {
        deterministic: cli.deterministic,
        workers,
    };
    pool.install(|| match &cli.command {
        Command::Extract(a) => extract(a, &ctx),
        Command::Evaluate(a) => evaluate(a, &ctx),
        Command::ExportFt(a) => export_ft(a, &ctx),
        Command::Summarize(a) => summarize(a, &ctx),
        Command::Stats(a) => stats(a),
        Command::Sentences(a) => sentences(a, &ctx),
        Command::Version => {
            println!("skx {}", crate::VERSION);
            Ok(())
        }
    })
}

struct RunContext {
    deterministic: bool,
    workers: usize,
}

impl RunContext {
    fn write_run_meta(
        &self,
        output: &Path,
        command: &str,
        seed: Option<u64>,
        settings: Value,
    ) -> Result<()> {
        let mut meta = Map::new();
        meta.insert("tool".into(), json!("skx"));
        meta.insert("version".into(), json!(crate::VERSION));
        meta.insert("command".into(), json!(command));
        meta.insert("seed".into(), json!(seed));
        meta.insert("settings".into(), settings);
        if !self.deterministic {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            meta.insert("created_unix".into(), json!(secs));
        }
        let path = run_meta_path(output);
        let body = serde_json::to_string_pretty(&Value::Object(meta)).expect("serializable");
        std::fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Sidecar holding run metadata for an output file: `<output>.run.json`.
pub fn run_meta_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".run.json");
    PathBuf::from(name)
}

fn splitter(path: &Option<PathBuf>) -> Result<SentenceSplitter> {
    match path {
        Some(p) => SentenceSplitter::from_file(p),
        None => Ok(SentenceSplitter::default()),
    }
}

fn extract(a: &ExtractArgs, ctx: &RunContext) -> Result<()> {
    let config = ExtractConfig {
        seed: a.seed,
        kmin: a.kmin,
        kmax_ratio: a.kmax_ratio,
        normalize_embeddings: a.normalize_embeddings,
        normalize_cites: !a.keep_cite_markers,
        kmeans: KMeansConfig {
            restarts: a.restarts,
            ..KMeansConfig::default()
        },
        splitter: splitter(&a.abbreviations)?,
        ..ExtractConfig::default()
    };
    config.validate()?;
    let provider: Box<dyn EmbeddingProvider> = match (&a.embeddings, &a.embed_url) {
        (Some(path), _) => Box::new(load_embedding_file(path)?),
        (None, Some(url)) => {
            let p = HttpProvider::new(url, a.batch_size, a.max_in_flight)?;
            p.health()?;
            Box::new(p)
        }
        (None, None) => {
            return Err(Error::Config(
                "one of --embeddings or --embed-url is required".into(),
            ))
        }
    };
    let records = read_corpus(&a.input, a.limit)?;
    let mut writer = JsonlWriter::create(&a.output)?;
    extract_corpus(
        records,
        provider.as_ref(),
        &config,
        &mut writer,
        a.chunk_size,
    )?;
    let n = writer.finish()?;
    log::info!("extracted {n} records to {}", a.output.display());
    ctx.write_run_meta(
        &a.output,
        "extract",
        Some(a.seed),
        json!({
            "input": a.input,
            "embedding_source": a.embeddings.as_ref().map(|p| p.display().to_string()).or(a.embed_url.clone()),
            "kmin": a.kmin,
            "kmax_ratio": a.kmax_ratio,
            "min_sentences_for_clustering": config.min_sentences_for_clustering,
            "restarts": a.restarts,
            "normalize_embeddings": a.normalize_embeddings,
            "normalize_cites": config.normalize_cites,
            "abbreviations": a.abbreviations,
            "limit": a.limit,
            "workers": ctx.workers,
            "records": n,
        }),
    )
}

fn text_field(line: &Map<String, Value>, keys: &[&str]) -> Option<Vec<String>> {
    keys.iter().find_map(|k| match line.get(*k)? {
        Value::String(s) => Some(vec![s.clone()]),
        Value::Array(items) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect(),
        _ => None,
    })
}

fn keyed_texts(path: &Path, keys: &[&str]) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in read_jsonl::<Map<String, Value>>(path)?.enumerate() {
        let line = line?;
        let id = match line.get("record_id").or_else(|| line.get("aid")) {
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
            None => {
                return Err(Error::Validation(format!(
                    "{}: line {}: missing record_id",
                    path.display(),
                    i + 1
                )))
            }
        };
        let texts = text_field(&line, keys).ok_or_else(|| {
            Error::Validation(format!(
                "{}: record `{id}`: expected one of {keys:?} as a string or string array",
                path.display()
            ))
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::Validation(format!(
                "{}: duplicate record_id `{id}`",
                path.display()
            )));
        }
        out.push((id, texts));
    }
    Ok(out)
}

fn evaluate(a: &EvaluateArgs, ctx: &RunContext) -> Result<()> {
    let use_stemmer = a.stemmer == Switch::On;
    let candidates = keyed_texts(&a.candidates, &["summaries", "extract_text", "text"])?;
    let references: HashMap<String, String> =
        keyed_texts(&a.references, &["related_work", "target", "text"])?
            .into_iter()
            .map(|(id, t)| (id, t.join("\n")))
            .collect();

    let mut pairs = Vec::new();
    for (id, samples) in &candidates {
        let reference = references
            .get(id)
            .ok_or_else(|| Error::Validation(format!("no reference for record `{id}`")))?;
        if samples.is_empty() {
            return Err(Error::Validation(format!(
                "record `{id}` has no candidate text"
            )));
        }
        for s in samples {
            pairs.push((s.as_str(), reference.as_str()));
        }
    }
    let scored: Vec<RougeScores> = pairs
        .par_iter()
        .map(|(c, r)| score_pair(c, r, use_stemmer))
        .collect();
    let mut records = Vec::with_capacity(candidates.len());
    let mut at = 0;
    for (id, samples) in &candidates {
        let group = &scored[at..at + samples.len()];
        at += samples.len();
        records.push(RecordScores {
            record_id: Some(id.clone()),
            scores: RougeScores::mean(group.iter()),
        });
    }
    let report = RougeReport::from_records(records, use_stemmer)?;
    print!("{}", report.to_table());
    if let Some(path) = &a.report {
        let body = serde_json::to_string_pretty(&report).expect("serializable");
        std::fs::write(path, body + "\n").map_err(|e| Error::io(path, e))?;
        ctx.write_run_meta(
            path,
            "evaluate",
            None,
            json!({
                "candidates": a.candidates,
                "references": a.references,
                "stemmer": use_stemmer,
                "records": report.records.len(),
            }),
        )?;
    }
    Ok(())
}

fn export_ft(a: &ExportArgs, ctx: &RunContext) -> Result<()> {
    let summary = export_finetune_dataset(
        read_extracted(&a.extracted)?,
        read_corpus(&a.corpus, None)?,
        &a.out,
    )?;
    eprintln!(
        "wrote {} pairs; skipped {} without target, {} not extracted",
        summary.written, summary.skipped_no_target, summary.skipped_not_extracted
    );
    ctx.write_run_meta(
        &a.out,
        "export-ft",
        None,
        json!({ "extracted": a.extracted, "corpus": a.corpus }),
    )
}

fn summarize(a: &SummarizeArgs, ctx: &RunContext) -> Result<()> {
    let mut requests = Vec::new();
    for r in read_extracted(&a.extracted)? {
        let r = r?;
        requests.push(GenerationRequest {
            max_new_tokens: a.max_new_tokens,
            num_samples: a.samples,
            seed: a.seed,
            ..GenerationRequest::new(r.record_id, r.extract_text)
        });
    }
    for r in &requests {
        r.validate()?;
    }
    let client = GenClient::new(&a.gen_url, ctx.workers);
    let generated = client.summarize_all(&requests, ctx.workers)?;
    let mut w = JsonlWriter::create(&a.out)?;
    for g in &generated {
        w.write(g)?;
    }
    w.finish()?;
    ctx.write_run_meta(
        &a.out,
        "summarize",
        a.seed,
        json!({
            "extracted": a.extracted,
            "gen_url": a.gen_url,
            "samples": a.samples,
            "max_new_tokens": a.max_new_tokens,
        }),
    )
}

fn stats(a: &StatsArgs) -> Result<()> {
    if a.bucket_width == 0 {
        return Err(Error::Config("--bucket-width must be positive".into()));
    }
    let records: Vec<_> = read_corpus(&a.input, None)?.collect::<Result<_>>()?;
    let source = corpus_stats(&records, count_tokens, a.bucket_width);
    let extracted = match &a.extracted {
        Some(path) => {
            let mut counts = Vec::new();
            for r in read_extracted(path)? {
                counts.push(r?.token_count);
            }
            Some(LengthStats::from_counts(counts, a.bucket_width))
        }
        None => None,
    };
    let mut out = std::io::stdout().lock();
    let io = |e| Error::io(Path::new("<stdout>"), e);
    if a.json {
        let v = json!({ "source": source, "extracted": extracted });
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&v).expect("serializable")
        )
        .map_err(io)?;
    } else {
        writeln!(out, "source tokens").map_err(io)?;
        write!(out, "{}", source.to_table()).map_err(io)?;
        if let Some(x) = extracted {
            writeln!(out, "\nextracted tokens").map_err(io)?;
            write!(out, "{}", x.to_table()).map_err(io)?;
        }
    }
    Ok(())
}

fn sentences(a: &SentencesArgs, ctx: &RunContext) -> Result<()> {
    let config = ExtractConfig {
        normalize_cites: !a.keep_cite_markers,
        splitter: splitter(&a.abbreviations)?,
        ..ExtractConfig::default()
    };
    let mut seen = HashSet::new();
    let mut w = JsonlWriter::create(&a.output)?;
    for record in read_corpus(&a.input, None)? {
        let record = record?;
        for (key, text) in record_documents(&record) {
            for s in document_sentences(key, text, &config) {
                if seen.insert(s.text.clone()) {
                    w.write(&json!({ "text": s.text }))?;
                }
            }
        }
    }
    let n = w.finish()?;
    ctx.write_run_meta(
        &a.output,
        "sentences",
        None,
        json!({ "input": a.input, "normalize_cites": config.normalize_cites, "sentences": n }),
    )
}
