//! The `taxoscope` command line: class-set construction, dataset ingestion,
//! fetching, balancing, evaluation and similarity queries.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use taxoscope::datapipe::{
    balance, fetch_images, ingest_url_dir, write_atomic, BalanceConfig, DatasetManifest, FetchOptions, HttpFetcher,
    DEFAULT_THRESHOLD,
};
use taxoscope::evalx::{evaluate, EvalContext, EvalOptions, PredictionSet};
use taxoscope::{build_class_set, ClassSet, LabelVocabulary, LexicalDatabase, TaxonomyIndex, TaxonomyOptions};

use config::{pick, ConfigFile};
use report::Format;

pub const WORDNET_ENV: &str = "TAXOSCOPE_WORDNET_DIR";
pub const DEFAULT_WORDNET_DIR: &str = "data/wordnet-3.0";

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "taxoscope", version, about = "Knowledge-driven evaluation of image classifiers over WordNet")]
struct Cli {
    /// Directory holding the WordNet database files (index.noun, data.noun).
    #[arg(long, global = true, value_name = "DIR")]
    wordnet_dir: Option<PathBuf>,
    /// Flat key = value file supplying defaults for the flags below.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the class set of a query concept against a label vocabulary.
    Classes(ClassesArgs),
    /// Create a manifest of pending images from per-class URL lists.
    Ingest(IngestArgs),
    /// Download pending images of a manifest.
    Fetch(FetchArgs),
    /// Keep the first k fetched images of each class.
    Balance(BalanceArgs),
    /// Evaluate model predictions and write the report tables.
    Evaluate(EvaluateArgs),
    /// Show every misclassification of one class with its taxonomy relation.
    Explain(ExplainArgs),
    /// Distance and similarities between two noun synsets.
    Similarity(SimilarityArgs),
}

#[derive(Debug, Args)]
struct ClassesArgs {
    /// Query concept: a lemma, lemma.n.N, or a wnid.
    #[arg(long)]
    query: Option<String>,
    /// Noun sense of the query lemma (1-based).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    sense: Option<u32>,
    /// Label vocabulary file (label_id, wnid, name).
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
    /// Maximum hyponym hops below the query; unbounded by default.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    depth: Option<u32>,
    /// Output file; the class set is printed when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Class set written by `classes`.
    #[arg(long, value_name = "FILE")]
    classes: PathBuf,
    /// Directory of `<wnid>.txt` URL lists, one URL per line in rank order.
    #[arg(long, value_name = "DIR")]
    lists: PathBuf,
    /// Manifest to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Manifest whose pending records are fetched.
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Directory receiving the downloaded images.
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    /// Updated manifest; defaults to rewriting the input manifest.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Concurrent requests [default: 8].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    max_in_flight: Option<u32>,
    /// Pause between requests to the same host [default: 500].
    #[arg(long, value_name = "MS")]
    per_host_delay_ms: Option<u64>,
    /// Per-request timeout [default: 30000].
    #[arg(long, value_name = "MS", value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: Option<u64>,
    /// Also retry records that failed in an earlier run.
    #[arg(long)]
    retry_failed: bool,
}

#[derive(Debug, Args)]
struct BalanceArgs {
    /// Fetched manifest.
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Balanced manifest to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Images kept per class (k) [default: 50].
    #[arg(long)]
    threshold: Option<u32>,
    /// Fill places left by failed fetches from deeper ranks.
    #[arg(long)]
    backfill: bool,
}

#[derive(Debug, Args)]
struct EvalInputs {
    /// Balanced manifest naming the evaluated images.
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Predictions file (one JSON object per line).
    #[arg(long, value_name = "FILE")]
    predictions: PathBuf,
    /// Label vocabulary the model predicts in.
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
    /// Class set supplying the query and class names.
    #[arg(long, value_name = "FILE")]
    classes: Option<PathBuf>,
    /// Only this model; all models in the predictions file by default.
    #[arg(long)]
    model: Option<String>,
    /// Largest taxonomy distance still tagged KIN [default: 4].
    #[arg(long)]
    kin_radius: Option<u32>,
    /// Average similarities over correct predictions too.
    #[arg(long)]
    include_correct: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: EvalInputs,
    /// Output directory for report.md or the CSV files.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Report format [default: markdown].
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Misclassification columns per class [default: 3].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    top_m: Option<u32>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    inputs: EvalInputs,
    /// Ground-truth class: wnid, label id or vocabulary name.
    #[arg(long)]
    class: String,
}

#[derive(Debug, Args)]
struct SimilarityArgs {
    /// First synset: wnid, lemma.n.N or lemma.
    first: String,
    /// Second synset.
    second: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

/// Parse `argv` (including the program name), run the subcommand and
/// return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match dispatch(cli, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            EXIT_DOMAIN
        }
    }
}

struct Env {
    wordnet_flag: Option<PathBuf>,
    config: ConfigFile,
}

impl Env {
    /// Flag, then environment variable, then config file, then the default.
    fn wordnet_dir(&self) -> PathBuf {
        self.wordnet_flag
            .clone()
            .or_else(|| std::env::var_os(WORDNET_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| self.config.path("wordnet_dir"))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_WORDNET_DIR))
    }

    fn checked_wordnet_dir(&self) -> Result<PathBuf, Failure> {
        let dir = self.wordnet_dir();
        if !dir.join("data.noun").is_file() || !dir.join("index.noun").is_file() {
            return Err(usage(format!(
                "no WordNet database in {} (set --wordnet-dir or {WORDNET_ENV})",
                dir.display()
            )));
        }
        Ok(dir)
    }

    fn vocab(&self, flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
        let path = flag
            .or_else(|| self.config.path("vocab"))
            .ok_or_else(|| usage("a label vocabulary is required (--vocab)"))?;
        input_file(&path)?;
        Ok(path)
    }

    fn cfg<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.config.parsed(key).map_err(usage)
    }

    fn flag(&self, key: &str, flag: bool) -> Result<bool, Failure> {
        Ok(flag || self.config.flag(key).map_err(usage)?)
    }
}

fn input_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file {} does not exist", path.display())))
    }
}

fn input_dir(path: &Path) -> Result<(), Failure> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("input directory {} does not exist", path.display())))
    }
}

/// The file's directory must exist and the path must not be a directory.
fn output_file(path: &Path) -> Result<(), Failure> {
    if path.is_dir() {
        return Err(usage(format!("output {} is a directory", path.display())));
    }
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(usage(format!("output directory {} does not exist", parent.display())));
    }
    Ok(())
}

fn output_dir(path: &Path) -> Result<(), Failure> {
    if path.exists() && !path.is_dir() {
        return Err(usage(format!("output {} is not a directory", path.display())));
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Outcome {
    let config = match &cli.config {
        Some(p) => ConfigFile::read(p).map_err(usage)?,
        None => ConfigFile::default(),
    };
    let env = Env {
        wordnet_flag: cli.wordnet_dir,
        config,
    };
    match cli.command {
        Command::Classes(a) => classes(&env, a, stdout),
        Command::Ingest(a) => ingest(a),
        Command::Fetch(a) => fetch(&env, a),
        Command::Balance(a) => balance_cmd(&env, a),
        Command::Evaluate(a) => evaluate_cmd(&env, a),
        Command::Explain(a) => explain(&env, a, stdout),
        Command::Similarity(a) => similarity(&env, a, stdout),
    }
}

fn load_taxonomy(dir: &Path) -> anyhow::Result<(LexicalDatabase, TaxonomyIndex)> {
    let db = LexicalDatabase::load(dir).with_context(|| format!("loading WordNet from {}", dir.display()))?;
    let taxo = TaxonomyIndex::build(&db, TaxonomyOptions::default())?;
    info!("loaded {} noun synsets, max depth {}", db.noun_count(), taxo.max_depth());
    Ok((db, taxo))
}

fn load_vocab(path: &Path, db: &LexicalDatabase) -> anyhow::Result<LabelVocabulary> {
    let vocab = LabelVocabulary::load(path, db)?;
    if !vocab.unresolved().is_empty() {
        let ids: Vec<String> = vocab.unresolved().iter().map(ToString::to_string).collect();
        warn!("{} vocabulary wnids are not in WordNet: {}", ids.len(), ids.join(", "));
    }
    Ok(vocab)
}

fn classes(env: &Env, a: ClassesArgs, stdout: &mut dyn Write) -> Outcome {
    let query = a
        .query
        .or_else(|| env.config.string("query"))
        .ok_or_else(|| usage("a query is required (--query)"))?;
    let sense = match a.sense {
        Some(s) => Some(s),
        None => env.cfg::<u32>("sense")?,
    };
    let depth = match a.depth {
        Some(d) => Some(d),
        None => env.cfg::<u32>("depth")?,
    };
    if depth == Some(0) || sense == Some(0) {
        return Err(usage("depth and sense must be at least 1"));
    }
    let vocab_path = env.vocab(a.vocab)?;
    let dir = env.checked_wordnet_dir()?;
    if let Some(out) = &a.out {
        output_file(out)?;
    }
    let query = match sense {
        Some(n) if query.parse::<taxoscope::SynsetId>().is_err() && !query.contains(".n.") => {
            format!("{query}.n.{n}")
        }
        Some(_) => return Err(usage("--sense needs a bare lemma as the query")),
        None => query,
    };

    let (db, taxo) = load_taxonomy(&dir)?;
    let vocab = load_vocab(&vocab_path, &db)?;
    let set = build_class_set(&db, &taxo, &vocab, &query, depth).map_err(anyhow::Error::from)?;
    let text = set.to_tsv();
    match &a.out {
        Some(out) => {
            write_atomic(out, text.as_bytes()).map_err(anyhow::Error::from)?;
            eprintln!("{} classes under {} written to {}", set.members.len(), set.query, out.display());
        }
        None => stdout.write_all(text.as_bytes()).map_err(anyhow::Error::from)?,
    }
    Ok(())
}

fn ingest(a: IngestArgs) -> Outcome {
    input_file(&a.classes)?;
    input_dir(&a.lists)?;
    output_file(&a.out)?;
    let set = ClassSet::read(&a.classes).map_err(anyhow::Error::from)?;
    let (manifest, warnings) = ingest_url_dir(&set, &a.lists).map_err(anyhow::Error::from)?;
    for w in &warnings {
        warn!("{w}");
    }
    manifest.write(&a.out).map_err(anyhow::Error::from)?;
    eprintln!("{} pending records written to {}", manifest.records.len(), a.out.display());
    Ok(())
}

fn fetch(env: &Env, a: FetchArgs) -> Outcome {
    input_file(&a.manifest)?;
    output_dir(&a.images)?;
    let out = a.out.clone().unwrap_or_else(|| a.manifest.clone());
    output_file(&out)?;
    let mut options = FetchOptions::new(&a.images);
    options.max_in_flight = pick(a.max_in_flight, env.cfg("max_in_flight")?, options.max_in_flight as u32) as usize;
    options.per_host_delay = Duration::from_millis(pick(
        a.per_host_delay_ms,
        env.cfg("per_host_delay_ms")?,
        options.per_host_delay.as_millis() as u64,
    ));
    options.timeout = Duration::from_millis(pick(a.timeout_ms, env.cfg("timeout_ms")?, options.timeout.as_millis() as u64));
    options.retry_failed = env.flag("retry_failed", a.retry_failed)?;
    if options.max_in_flight == 0 || options.timeout.is_zero() {
        return Err(usage("max_in_flight and timeout_ms must be at least 1"));
    }

    let manifest = DatasetManifest::read(&a.manifest).map_err(anyhow::Error::from)?;
    let report = fetch_images(manifest, &HttpFetcher::new(), &options).map_err(anyhow::Error::from)?;
    report.manifest.write(&out).map_err(anyhow::Error::from)?;
    let counts: Vec<String> = report.counts.iter().map(|(s, n)| format!("{s:?}: {n}").to_lowercase()).collect();
    eprintln!("{} requests; {}", report.attempted, counts.join(", "));
    Ok(())
}

fn balance_cmd(env: &Env, a: BalanceArgs) -> Outcome {
    input_file(&a.manifest)?;
    output_file(&a.out)?;
    let k = pick(a.threshold, env.cfg("threshold")?, DEFAULT_THRESHOLD);
    let config = BalanceConfig::new(k)
        .map_err(|e| usage(e.to_string()))?
        .with_backfill(env.flag("backfill", a.backfill)?);
    let manifest = DatasetManifest::read(&a.manifest).map_err(anyhow::Error::from)?;
    let (balanced, warnings) = balance(&manifest, config);
    for w in &warnings {
        warn!("{w}");
    }
    balanced.write(&a.out).map_err(anyhow::Error::from)?;
    eprintln!(
        "{} records kept across {} classes, written to {}",
        balanced.records.len(),
        balanced.classes.len(),
        a.out.display()
    );
    Ok(())
}

struct Loaded {
    db: LexicalDatabase,
    taxo: TaxonomyIndex,
    vocab: LabelVocabulary,
    class_set: Option<ClassSet>,
    manifest: DatasetManifest,
    predictions: PredictionSet,
    models: Vec<String>,
    options: EvalOptions,
}

fn validate_eval_inputs(env: &Env, i: &EvalInputs) -> Result<(PathBuf, PathBuf), Failure> {
    input_file(&i.manifest)?;
    input_file(&i.predictions)?;
    if let Some(c) = &i.classes {
        input_file(c)?;
    }
    let vocab = env.vocab(i.vocab.clone())?;
    let dir = env.checked_wordnet_dir()?;
    Ok((vocab, dir))
}

fn load_eval(env: &Env, i: EvalInputs, vocab_path: &Path, dir: &Path, top_m: usize) -> Result<Loaded, Failure> {
    let options = EvalOptions {
        kin_radius: pick(i.kin_radius, env.cfg("kin_radius")?, EvalOptions::default().kin_radius),
        top_m,
        include_correct: env.flag("include_correct", i.include_correct)?,
    };
    let model = i.model.or_else(|| env.config.string("model"));
    let (db, taxo) = load_taxonomy(dir)?;
    let vocab = load_vocab(vocab_path, &db)?;
    let class_set = i
        .classes
        .as_ref()
        .map(ClassSet::read)
        .transpose()
        .map_err(anyhow::Error::from)?;
    let manifest = DatasetManifest::read(&i.manifest).map_err(anyhow::Error::from)?;
    let predictions = PredictionSet::read(&i.predictions).map_err(anyhow::Error::from)?;
    let available = predictions.models();
    let models = match model {
        Some(m) if available.contains(&m) => vec![m],
        Some(m) => return Err(anyhow!("no predictions for model {m:?} (found: {})", available.join(", ")).into()),
        None if available.is_empty() => return Err(anyhow!("{} holds no predictions", i.predictions.display()).into()),
        None => available,
    };
    Ok(Loaded {
        db,
        taxo,
        vocab,
        class_set,
        manifest,
        predictions,
        models,
        options,
    })
}

fn run_evaluation(l: &Loaded) -> anyhow::Result<Vec<taxoscope::EvalReport>> {
    let ctx = EvalContext {
        db: &l.db,
        taxo: &l.taxo,
        vocab: &l.vocab,
        class_set: l.class_set.as_ref(),
    };
    l.models
        .iter()
        .map(|m| evaluate(&l.manifest, &l.predictions, m, ctx, l.options).map_err(anyhow::Error::from))
        .collect()
}

fn evaluate_cmd(env: &Env, a: EvaluateArgs) -> Outcome {
    let format = match a.format {
        Some(f) => f,
        None => env.cfg::<Format>("format")?.unwrap_or(Format::Markdown),
    };
    let top_m = pick(a.top_m, env.cfg("top_m")?, EvalOptions::default().top_m as u32) as usize;
    if top_m == 0 {
        return Err(usage("top_m must be at least 1"));
    }
    let (vocab, dir) = validate_eval_inputs(env, &a.inputs)?;
    output_dir(&a.out)?;
    let loaded = load_eval(env, a.inputs, &vocab, &dir, top_m)?;
    let reports = run_evaluation(&loaded)?;
    let written = report::render_report(&reports, format, top_m, &a.out).map_err(anyhow::Error::from)?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn explain(env: &Env, a: ExplainArgs, stdout: &mut dyn Write) -> Outcome {
    let (vocab, dir) = validate_eval_inputs(env, &a.inputs)?;
    let loaded = load_eval(env, a.inputs, &vocab, &dir, EvalOptions::default().top_m)?;
    let wanted = match a.class.parse::<taxoscope::SynsetId>() {
        Ok(id) => id,
        Err(_) => match loaded.vocab.lookup(&a.class) {
            Ok(e) => e.wnid,
            Err(e) => loaded
                .db
                .synsets_by_lemma(&a.class, taxoscope::PartOfSpeech::Noun)
                .ok()
                .and_then(|senses| senses.iter().map(|s| s.id).find(|id| loaded.manifest.classes.contains(id)))
                .ok_or_else(|| anyhow!("class {:?}: {e}", a.class))?,
        },
    };
    if !loaded.manifest.classes.contains(&wanted) {
        return Err(anyhow!("class {wanted} is not in the manifest").into());
    }
    let reports = run_evaluation(&loaded)?;
    let picked: Vec<_> = reports
        .iter()
        .flat_map(|r| r.classes.iter().filter(|c| c.gt_class == wanted).map(move |c| (r, c)))
        .collect();
    stdout
        .write_all(report::render_explanation(&picked).as_bytes())
        .map_err(anyhow::Error::from)?;
    Ok(())
}

fn similarity(env: &Env, a: SimilarityArgs, stdout: &mut dyn Write) -> Outcome {
    let dir = env.checked_wordnet_dir()?;
    let (db, taxo) = load_taxonomy(&dir)?;
    let first = db.resolve(&a.first).map_err(anyhow::Error::from)?;
    let second = db.resolve(&a.second).map_err(anyhow::Error::from)?;
    let (x, y) = (first.id, second.id);
    let s = taxo.subsumption(x, y).map_err(anyhow::Error::from)?;
    let sim = taxo.similarity(x, y).map_err(anyhow::Error::from)?;
    let lcs_name = db.noun(s.lcs).map(|n| n.display_name()).unwrap_or_default();
    let text = format!(
        "first     {x} {}\nsecond    {y} {}\ndistance  {}\nlcs       {} {lcs_name} (depth {})\npath      {:.4}\nlch       {:.4}\nwups      {:.4}\nsiblings  {}\n",
        first.display_name(),
        second.display_name(),
        s.distance,
        s.lcs,
        s.lcs_depth,
        sim.path_sim,
        sim.lch,
        sim.wups,
        if taxo.are_siblings(x, y) { "yes" } else { "no" },
    );
    stdout.write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
    Ok(())
}
