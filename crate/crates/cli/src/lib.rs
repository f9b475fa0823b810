//! `labelscope` command-line entry points.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use labelscope_core::corpus::{
    export, ingest, ingest_annotations, load_export, write_csv_field, AnnotationSet, CorpusSnapshot, Format,
    IngestOptions, LabelSchema,
};
use labelscope_core::explain::{explain, ExplainConfig};
use labelscope_core::projector::{layout_records, ColorBy, Layout, ProjectionConfig};
use labelscope_core::quality::{confidence_report, cooccurrence, density_report, duplication_report};
use labelscope_core::relabel::{parse_ops, RelabelHistory};
use labelscope_core::surrogate::{evaluate, load_model, save_model, stratified_split, train, TrainingConfig};
use labelscope_core::synth::{hvac_scenario, keyword_corpus, nlu_scenario, KeywordSpec, SynthCorpus};
use labelscope_core::vectorizer::VectorizerConfig;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Parser, Serialize)]
#[command(name = "labelscope", version, about = "Annotation-quality analysis for multi-label text corpora")]
struct Cli {
    /// Seed for every stochastic step; overrides seeds in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that receives the resolved configuration of each run.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Parse a corpus and annotations, print stats, optionally write a snapshot export.
    Ingest(IngestArgs),
    /// Train the surrogate model and write the model file.
    Train(TrainArgs),
    /// Evaluate a saved model on its validation split or on all records.
    Evaluate(EvaluateArgs),
    /// Print a quality report.
    Report(ReportArgs),
    /// Compute a 2-D projection of the records.
    Project(ProjectArgs),
    /// Explain one record's prediction for a category.
    Explain(ExplainArgs),
    /// Propose (and optionally apply) relabel operations from a file.
    Relabel(RelabelArgs),
    /// Write the snapshot as JSON lines plus schema sidecar.
    Export(ExportArgs),
    /// Run the HTTP API server.
    Serve(ServeArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
struct CorpusArgs {
    /// Corpus file (CSV or JSON lines).
    #[arg(long, required_unless_present = "snapshot")]
    corpus: Option<PathBuf>,
    /// Annotation file: {"record-id": {"category": ["label", ..]}}.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Schema file; inferred from the annotations when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Corpus format; taken from the file extension when absent.
    #[arg(long, value_parser = parse_format)]
    input_format: Option<Format>,
    /// Text fields in modeling order (comma separated).
    #[arg(long, value_delimiter = ',')]
    fields: Vec<String>,
    /// Column or key holding record ids; empty means row-number ids.
    #[arg(long, default_value = "id")]
    id_field: String,
    /// A snapshot export, instead of --corpus/--annotations.
    #[arg(long, conflicts_with_all = ["corpus", "annotations", "schema"])]
    snapshot: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: labelscope_core::Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Write the ingested snapshot as an export.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default)]
struct TrainFile {
    vectorizer: VectorizerConfig,
    training: TrainingConfig,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// JSON file with optional "vectorizer" and "training" sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Regularization constant.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Reduced vector dimension.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    #[arg(long)]
    calibration_fraction: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    model: PathBuf,
    /// Evaluate on every record instead of the validation split.
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Metric {
    Duplication,
    Density,
    Confidence,
    Cooccurrence,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Order {
    Asc,
    Desc,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    metric: Metric,
    /// Category filter (required for cooccurrence).
    #[arg(long)]
    category: Option<String>,
    /// Model file (required for confidence; supplies the tokenizer for density).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Density ordering; corpus order when absent.
    #[arg(long)]
    order: Option<Order>,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LayoutArg {
    WordVector,
    ConfidenceVector,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ColorArg {
    Confidence,
    InfoDensity,
}

#[derive(Debug, Args, Serialize)]
struct ProjectArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "word-vector")]
    layout: LayoutArg,
    #[arg(long, value_enum, default_value = "info-density")]
    color: ColorArg,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_points: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ExplainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    record: String,
    #[arg(long)]
    category: String,
    /// Label to explain; the category's most probable label when absent.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    kernel_width: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct RelabelArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// JSON array of relabel operations.
    #[arg(long)]
    ops: PathBuf,
    /// Apply the proposed operations; otherwise only validate them.
    #[arg(long)]
    apply: bool,
    /// Export of the relabeled snapshot; the audit log is written beside it.
    #[arg(long, requires = "apply")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ExportArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ServeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SynthKind {
    /// Keyword-separable corpus.
    Keyword,
    /// Maintenance-log corpus with a duplicate label pair and markup pollution.
    Hvac,
    /// Utterance corpus with an entity-free cluster.
    Nlu,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 500)]
    records: usize,
    /// Keyword corpus: number of categories.
    #[arg(long, default_value_t = 3)]
    categories: usize,
    /// Keyword corpus: labels per category.
    #[arg(long, default_value_t = 4)]
    labels_per_category: usize,
    /// Scenario corpora: size of the planted sub-corpus.
    #[arg(long, default_value_t = 50)]
    planted: usize,
    /// Output directory; the workdir when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<labelscope_core::Error> for CliError {
    fn from(e: labelscope_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the subcommand,
/// writing results to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Ingest(a) => {
            let snap = load_corpus(&a.corpus)?;
            record_run(cli, json!({ "ingest": &snap.stats() }))?;
            if let Some(path) = &a.out {
                export(&snap, path)?;
            }
            emit(out, &snap.stats())
        }
        Command::Train(a) => cmd_train(cli, a, seed, out),
        Command::Evaluate(a) => {
            let snap = load_corpus(&a.corpus)?;
            let model = load_model(&a.model)?;
            record_run(cli, json!({ "training": &model.training_config }))?;
            let ids: Vec<String> = if a.all {
                snap.records().iter().map(|r| r.id.clone()).collect()
            } else {
                let t = &model.training_config;
                let split = stratified_split(&snap, t.validation_fraction, t.calibration_fraction, t.seed)?;
                split.validation.iter().map(|&i| snap.records()[i].id.clone()).collect()
            };
            let metrics = evaluate(&model, &snap, &ids)?;
            emit(out, &metrics)
        }
        Command::Report(a) => cmd_report(cli, a, out),
        Command::Project(a) => {
            let snap = load_corpus(&a.corpus)?;
            let model = a.model.as_deref().map(load_model).transpose()?;
            let defaults = ProjectionConfig::default();
            let cfg = ProjectionConfig {
                layout: match a.layout {
                    LayoutArg::WordVector => Layout::WordVector,
                    LayoutArg::ConfidenceVector => Layout::ConfidenceVector,
                },
                color: match a.color {
                    ColorArg::Confidence => ColorBy::Confidence,
                    ColorArg::InfoDensity => ColorBy::InfoDensity,
                },
                perplexity: a.perplexity.unwrap_or(defaults.perplexity),
                iterations: a.iterations.unwrap_or(defaults.iterations),
                learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
                seed: seed.unwrap_or(defaults.seed),
                max_points: a.max_points.unwrap_or(defaults.max_points),
            };
            if cfg.needs_model() && model.is_none() {
                return Err(CliError::Usage("this layout/color needs --model".into()));
            }
            record_run(cli, json!({ "projection": &cfg }))?;
            let projection = layout_records(model.as_ref(), &snap, &cfg)?;
            match &a.out {
                Some(path) => write_file(path, &to_json(&projection)),
                None => emit(out, &projection),
            }
        }
        Command::Explain(a) => {
            let snap = load_corpus(&a.corpus)?;
            let model = load_model(&a.model)?;
            let defaults = ExplainConfig::default();
            let cfg = ExplainConfig {
                n_samples: a.samples.unwrap_or(defaults.n_samples),
                kernel_width: a.kernel_width.unwrap_or(defaults.kernel_width),
                n_features: a.features.unwrap_or(defaults.n_features),
                seed: seed.unwrap_or(defaults.seed),
                target: a.target.clone(),
            };
            record_run(cli, json!({ "explain": &cfg }))?;
            let record = snap
                .record(&a.record)
                .ok_or_else(|| labelscope_core::Error::UnknownRecord(a.record.clone()))?;
            emit(out, &explain(&model, record, &a.category, &cfg)?)
        }
        Command::Relabel(a) => cmd_relabel(cli, a, out),
        Command::Export(a) => {
            let snap = load_corpus(&a.corpus)?;
            record_run(cli, Value::Null)?;
            export(&snap, &a.out)?;
            emit(out, &snap.stats())
        }
        Command::Serve(a) => {
            let snap = load_corpus(&a.corpus)?;
            let model = a.model.as_deref().map(load_model).transpose()?;
            let addr: SocketAddr = format!("{}:{}", a.host, a.port)
                .parse()
                .map_err(|e| CliError::Usage(format!("bad listen address: {e}")))?;
            record_run(cli, Value::Null)?;
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(std::io::stderr)
                .try_init();
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(e.to_string()))?;
            rt.block_on(labelscope_server::serve(addr, snap, model))
                .map_err(|e| CliError::Data(format!("server: {e}")))
        }
        Command::Synth(a) => cmd_synth(cli, a, seed, out),
    }
}

fn cmd_train(cli: &Cli, a: &TrainArgs, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let snap = load_corpus(&a.corpus)?;
    let mut cfg: TrainFile = match &a.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => TrainFile::default(),
    };
    if let Some(s) = seed {
        cfg.training.seed = s;
        cfg.vectorizer.seed = s;
    }
    if let Some(c) = a.c {
        cfg.training.c = c;
    }
    if let Some(e) = a.epochs {
        cfg.training.epochs = e;
    }
    if let Some(k) = a.components {
        cfg.vectorizer.components = k;
    }
    if let Some(f) = a.validation_fraction {
        cfg.training.validation_fraction = f;
    }
    if let Some(f) = a.calibration_fraction {
        cfg.training.calibration_fraction = f;
    }
    record_run(cli, serde_json::to_value(&cfg).expect("config serializes"))?;
    let outcome = train(&snap, &cfg.vectorizer, &cfg.training)?;
    save_model(&outcome.model, &a.out)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    emit(
        out,
        &json!({
            "model": a.out,
            "trained_on_version": outcome.model.trained_on_version,
            "metrics": outcome.metrics,
            "warnings": outcome.warnings,
        }),
    )
}

fn cmd_report(cli: &Cli, a: &ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let snap = load_corpus(&a.corpus)?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    record_run(cli, Value::Null)?;
    match a.metric {
        Metric::Duplication => {
            let mut report = duplication_report(&snap);
            if let Some(cat) = &a.category {
                if snap.schema().category(cat).is_none() {
                    return Err(labelscope_core::Error::UnknownCategory(cat.clone()).into());
                }
                report.categories.retain(|c| &c.category == cat);
            }
            match a.format {
                OutputFormat::Json => emit(out, &report),
                OutputFormat::Csv => {
                    let mut rows = vec![vec!["category".to_string(), "score".to_string()]];
                    for c in &report.categories {
                        rows.push(vec![c.category.clone(), c.score.map(fmt_f64).unwrap_or_default()]);
                    }
                    emit_csv(out, &rows)
                }
            }
        }
        Metric::Density => {
            let tokenizer = match &model {
                Some(m) => m.vectorizer.tfidf.tokenizer().clone(),
                None => VectorizerConfig::default().build_tokenizer(),
            };
            let report = density_report(&snap, &tokenizer);
            let entries: Vec<_> = match a.order {
                None => report.entries.iter().collect(),
                Some(Order::Asc) => report.ascending(),
                Some(Order::Desc) => report.descending(),
            };
            match a.format {
                OutputFormat::Json => emit(out, &json!({ "entries": entries })),
                OutputFormat::Csv => {
                    let mut rows = vec![["id", "label_count", "word_count", "d_info"].map(String::from).to_vec()];
                    for e in entries {
                        rows.push(vec![
                            e.id.clone(),
                            e.label_count.to_string(),
                            e.word_count.to_string(),
                            fmt_f64(e.d_info),
                        ]);
                    }
                    emit_csv(out, &rows)
                }
            }
        }
        Metric::Confidence => {
            let model = model.ok_or_else(|| CliError::Usage("confidence report needs --model".into()))?;
            let entries = confidence_report(&model, &snap);
            match a.format {
                OutputFormat::Json => emit(out, &json!({ "label_order": model.label_order(), "entries": entries })),
                OutputFormat::Csv => {
                    let cats: Vec<String> = model.categories.iter().map(|c| c.name.clone()).collect();
                    let mut header = vec!["id".to_string(), "score".to_string()];
                    header.extend(cats.iter().cloned());
                    let mut rows = vec![header];
                    for e in &entries {
                        let mut row = vec![e.id.clone(), fmt_f64(e.score)];
                        row.extend(cats.iter().map(|c| e.categories.get(c).map(|v| fmt_f64(*v)).unwrap_or_default()));
                        rows.push(row);
                    }
                    emit_csv(out, &rows)
                }
            }
        }
        Metric::Cooccurrence => {
            let cat = a
                .category
                .as_deref()
                .ok_or_else(|| CliError::Usage("cooccurrence report needs --category".into()))?;
            let stats = cooccurrence(&snap, cat)?;
            match a.format {
                OutputFormat::Json => emit(
                    out,
                    &json!({ "category": stats.category, "labels": stats.labels, "matrix": stats.counts }),
                ),
                OutputFormat::Csv => {
                    let mut header = vec!["label".to_string()];
                    header.extend(stats.labels.iter().cloned());
                    let mut rows = vec![header];
                    for (label, counts) in stats.labels.iter().zip(&stats.counts) {
                        let mut row = vec![label.clone()];
                        row.extend(counts.iter().map(|c| c.to_string()));
                        rows.push(row);
                    }
                    emit_csv(out, &rows)
                }
            }
        }
    }
}

fn cmd_relabel(cli: &Cli, a: &RelabelArgs, out: &mut dyn Write) -> CliResult<()> {
    let snap = load_corpus(&a.corpus)?;
    let ops = parse_ops(&read(&a.ops)?)?;
    record_run(cli, json!({ "ops": &ops }))?;
    let from = snap.version();
    let mut history = RelabelHistory::new(snap);
    for op in ops {
        history.propose(op)?;
    }
    if !a.apply {
        return emit(out, &json!({ "version": from, "history": history.history_list() }));
    }
    let head = history.head().clone();
    let next = history.apply(&head)?;
    if let Some(path) = &a.out {
        export(&next, path)?;
        let log = audit_log_path(path);
        let mut buf = Vec::new();
        history.write_audit_log(&mut buf).map_err(|e| io_error(&log, e))?;
        write_bytes(&log, &buf)?;
    }
    emit(
        out,
        &json!({
            "from_version": from,
            "to_version": next.version(),
            "stats": next.stats(),
            "history": history.history_list(),
        }),
    )
}

/// `new.jsonl` -> `new.audit.jsonl`.
pub fn audit_log_path(export_path: &Path) -> PathBuf {
    export_path.with_extension("audit.jsonl")
}

fn cmd_synth(cli: &Cli, a: &SynthArgs, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let seed = seed.unwrap_or(0);
    let (corpus, planted): (SynthCorpus, Vec<String>) = match a.kind {
        SynthKind::Keyword => (
            keyword_corpus(&KeywordSpec {
                records: a.records,
                categories: a.categories,
                labels_per_category: a.labels_per_category,
                seed,
            }),
            Vec::new(),
        ),
        SynthKind::Hvac => hvac_scenario(a.records, a.planted, seed),
        SynthKind::Nlu => nlu_scenario(a.records, a.planted, seed),
    };
    record_run(cli, Value::Null)?;
    let dir = a.out.clone().unwrap_or_else(|| cli.workdir.clone());
    let paths = corpus.write(&dir)?;
    emit(
        out,
        &json!({
            "corpus": paths.corpus,
            "annotations": paths.annotations,
            "schema": paths.schema,
            "records": corpus.records.len(),
            "planted": planted,
        }),
    )
}

fn load_corpus(a: &CorpusArgs) -> CliResult<CorpusSnapshot> {
    if let Some(path) = &a.snapshot {
        return Ok(load_export(path)?);
    }
    let path = a.corpus.as_ref().expect("clap enforces --corpus or --snapshot");
    let format = match a.input_format {
        Some(f) => f,
        None => Format::from_path(path)
            .ok_or_else(|| CliError::Usage(format!("cannot tell the format of {}; pass --input-format", path.display())))?,
    };
    let opts = IngestOptions {
        fields: a.fields.clone(),
        id_field: Some(a.id_field.clone()).filter(|f| !f.is_empty()),
    };
    let snap = ingest(path, format, &opts)?;
    let schema = match (&a.schema, &a.annotations) {
        (Some(s), _) => LabelSchema::from_json(&read(s)?)?,
        (None, Some(ann)) => LabelSchema::infer_from_annotations(&read(ann)?)?,
        (None, None) => LabelSchema::default(),
    };
    let annotations = match &a.annotations {
        Some(ann) => ingest_annotations(ann, &schema, &snap)?,
        None => AnnotationSet::empty(schema),
    };
    Ok(snap.with_annotations(annotations)?)
}

/// Writes `{command, seed, args, resolved}` to `<workdir>/labelscope-<command>.json`.
fn record_run(cli: &Cli, resolved: Value) -> CliResult<()> {
    let args = serde_json::to_value(&cli.command).expect("args serialize");
    let name = args["command"].as_str().expect("tagged").to_string();
    let body = json!({ "command": name, "seed": cli.seed, "args": args, "resolved": resolved });
    fs::create_dir_all(&cli.workdir).map_err(|e| io_error(&cli.workdir, e))?;
    write_file(&cli.workdir.join(format!("labelscope-{name}.json")), &to_json(&body))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    write_bytes(path, format!("{text}\n").as_bytes())
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn emit(out: &mut dyn Write, v: &impl Serialize) -> CliResult<()> {
    writeln!(out, "{}", to_json(v)).map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn emit_csv(out: &mut dyn Write, rows: &[Vec<String>]) -> CliResult<()> {
    let mut text = String::new();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            write_csv_field(&mut text, cell);
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}
