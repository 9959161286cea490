use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use brat_eval::analytics::{corpus_stats, density_rows, subtype_rows};
use brat_eval::report::{self, Format};
use brat_eval::schema::{
    load_schema, parse_failure_violation, validate_document, AnnotationSchema, Violation,
};
use brat_eval::scoring::score_corpus;
use brat_eval::significance::{
    bootstrap_from_counts, BootstrapConfig, DEFAULT_ALPHA, DEFAULT_REPETITIONS, DEFAULT_SEED,
};
use brat_eval::standoff::{
    load_corpus, load_documents, Corpus, LoadOptions, MetadataRules,
};
use brat_eval::testkit::{generate_gold, perturb, write_corpus, GeneratorConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// Tab-separated columns.
    Delimited,
    /// JSON.
    Structured,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Delimited => Format::Delimited,
            FormatArg::Structured => Format::Structured,
        }
    }
}

/// Score, compare and inspect BRAT standoff event annotations.
#[derive(Debug, Parser)]
#[command(name = "brat-eval", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Schema config file; the built-in SHAC scheme when absent.
    #[arg(long, global = true, env = "BRAT_EVAL_SCHEMA")]
    schema: Option<PathBuf>,
    /// Report file; standard output when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "delimited")]
    format: FormatArg,
    /// Reject unsupported lines and covered-text mismatches.
    #[arg(long, global = true)]
    strict: bool,
    /// Partition manifest (`doc_id,source,split` per line).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker threads; all cores when absent. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Add a generation timestamp to report files.
    #[arg(long, global = true)]
    stamp: bool,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score predictions against gold annotations.
    Score(ScoreArgs),
    /// Paired bootstrap comparison of two systems on the same gold notes.
    Compare(CompareArgs),
    /// Note, event and subtype counts of a corpus.
    Stats { corpus: PathBuf },
    /// Check a corpus against the schema; exits 2 if anything is flagged.
    Validate { corpus: PathBuf },
    /// Write a synthetic corpus described by a generator config.
    #[command(hide = true)]
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct ScoreArgs {
    gold: PathBuf,
    pred: PathBuf,
    /// Per-subtype breakdown file.
    #[arg(long)]
    subtypes: Option<PathBuf>,
    /// Per event-density breakdown file.
    #[arg(long)]
    density: Option<PathBuf>,
    /// x/y series of the breakdowns as JSON.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    gold: PathBuf,
    pred_a: PathBuf,
    pred_b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Every bootstrap F1 difference, one per line.
    #[arg(long)]
    dump_deltas: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Generator config (TOML).
    config: PathBuf,
    /// Directory for the gold notes.
    out: PathBuf,
    /// Also write perturbed predictions here.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Edit log of the perturbation as JSON.
    #[arg(long, requires = "pred")]
    edit_log: Option<PathBuf>,
}

struct Ctx<'a> {
    common: &'a Common,
    schema: AnnotationSchema,
    rules: MetadataRules,
}

impl Ctx<'_> {
    fn format(&self) -> Format {
        self.common.format.into()
    }

    fn load(&self, dir: &Path, fallback: Option<&Corpus>) -> Result<Corpus, CliError> {
        let opts = LoadOptions {
            strict: self.common.strict,
            rules: self.rules.clone(),
            text_fallback: fallback,
        };
        load_corpus(dir, &opts).map_err(data)
    }

    fn stamp(&self, body: String) -> String {
        if !self.common.stamp {
            return body;
        }
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        match self.format() {
            Format::Delimited => format!("# generated_at={secs}\n{body}"),
            Format::Structured => format!("{{\n\"generated_at\": {secs},\n\"report\": {body}}}\n"),
        }
    }

    /// Writes the main report to `--output`, or to stdout after `summary`.
    fn emit(&self, summary: &str, body: String) -> Result<(), CliError> {
        let body = self.stamp(body);
        print!("{summary}");
        match &self.common.output {
            Some(path) => write(path, &body),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, content).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn cmd_score(ctx: &Ctx<'_>, args: &ScoreArgs) -> Result<(), CliError> {
    let gold = ctx.load(&args.gold, None)?;
    let pred = ctx.load(&args.pred, Some(&gold))?;
    let score = score_corpus(&gold, &pred, &ctx.schema).map_err(data)?;
    let report = score.report();
    let summary = format!(
        "notes\t{}\n{}\n",
        gold.len(),
        report::overall_line(&report.overall())
    );

    let subtypes = subtype_rows(&score);
    let density = density_rows(&score, &gold);
    if let Some(path) = &args.subtypes {
        let body = match ctx.format() {
            Format::Delimited => report::subtype_tsv(&subtypes),
            Format::Structured => report::to_json(&subtypes),
        };
        write(path, &ctx.stamp(body))?;
    }
    if let Some(path) = &args.density {
        let body = match ctx.format() {
            Format::Delimited => report::density_tsv(&density),
            Format::Structured => report::to_json(&density),
        };
        write(path, &ctx.stamp(body))?;
    }
    if let Some(path) = &args.plot_data {
        write(path, &report::to_json(&report::plot_series(&subtypes, &density)))?;
    }
    ctx.emit(&summary, report::metric_report(&report, ctx.format()))
}

fn cmd_compare(ctx: &Ctx<'_>, args: &CompareArgs) -> Result<(), CliError> {
    let cfg = BootstrapConfig {
        repetitions: args.reps,
        seed: args.seed,
        alpha: args.alpha,
    };
    if cfg.repetitions == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(CliError::Usage("--alpha must lie in (0, 1)".into()));
    }
    let gold = ctx.load(&args.gold, None)?;
    let a = ctx.load(&args.pred_a, Some(&gold))?;
    let b = ctx.load(&args.pred_b, Some(&gold))?;
    let sa = score_corpus(&gold, &a, &ctx.schema).map_err(data)?;
    let sb = score_corpus(&gold, &b, &ctx.schema).map_err(data)?;
    let notes: Vec<_> = gold
        .doc_ids()
        .map(|id| {
            (
                sa.documents[id].counts.total(),
                sb.documents[id].counts.total(),
            )
        })
        .collect();
    log::info!("bootstrap: {} repetitions, seed {}", cfg.repetitions, cfg.seed);
    let out = bootstrap_from_counts(&notes, &cfg).map_err(data)?;
    let r = &out.result;
    let summary = format!(
        "seed\t{}\nrepetitions\t{}\nF1_A\t{:.6}\nF1_B\t{:.6}\ndelta\t{:.6}\np\t{} ({}/{})\nverdict\t{} at alpha={}\n",
        r.seed,
        r.repetitions,
        r.f1_a,
        r.f1_b,
        r.observed_delta,
        r.p_value,
        r.p_numerator,
        r.p_denominator,
        r.verdict(),
        r.alpha
    );
    if let Some(path) = &args.dump_deltas {
        let mut body = String::with_capacity(out.deltas.len() * 10);
        for d in &out.deltas {
            body.push_str(&format!("{d}\n"));
        }
        write(path, &body)?;
    }
    ctx.emit(&summary, report::bootstrap(r, ctx.format()))
}

fn cmd_stats(ctx: &Ctx<'_>, corpus: &Path) -> Result<(), CliError> {
    let corpus = ctx.load(corpus, None)?;
    let stats = corpus_stats(&corpus, &ctx.schema);
    let summary = if ctx.common.output.is_some() {
        report::stats_human(&stats)
    } else {
        String::new()
    };
    ctx.emit(&summary, report::stats(&stats, ctx.format()))
}

fn cmd_validate(ctx: &Ctx<'_>, dir: &Path) -> Result<(), CliError> {
    let opts = LoadOptions {
        strict: ctx.common.strict,
        rules: ctx.rules.clone(),
        text_fallback: None,
    };
    let docs = load_documents(dir, &opts).map_err(data)?;
    let mut violations: Vec<Violation> = Vec::new();
    let n = docs.len();
    for (doc_id, doc) in docs {
        match doc {
            Ok(doc) => violations.extend(validate_document(&doc, &ctx.schema)),
            Err(brat_eval::standoff::CorpusError::Parse { source, .. }) => {
                violations.push(parse_failure_violation(&doc_id, &source))
            }
            Err(e) => return Err(data(e)),
        }
    }
    let summary = format!("{} violation(s) in {} document(s)\n", violations.len(), n);
    if ctx.common.output.is_some() {
        ctx.emit(&summary, report::violations(&violations, ctx.format()))?;
    } else {
        ctx.emit("", report::violations(&violations, ctx.format()))?;
        eprint!("{summary}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(String::new()))
    }
}

fn cmd_gen(ctx: &Ctx<'_>, args: &GenArgs) -> Result<(), CliError> {
    let cfg: GeneratorConfig = toml::from_str(&read(&args.config)?)
        .map_err(|e| data(format!("{}: {e}", args.config.display())))?;
    let gold = generate_gold(&cfg, &ctx.schema).map_err(data)?;
    write_corpus(&gold, &args.out).map_err(data)?;
    println!("seed\t{}\nnotes\t{}", cfg.seed, gold.len());
    if let Some(dir) = &args.pred {
        let (pred, log) = perturb(&gold, &cfg, &ctx.schema);
        write_corpus(&pred, dir).map_err(data)?;
        if let Some(path) = &args.edit_log {
            write(path, &report::to_json(&log))?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let schema = match &cli.common.schema {
        Some(path) => load_schema(&read(path)?)
            .map_err(|e| data(format!("{}: {e}", path.display())))?,
        None => AnnotationSchema::shac(),
    };
    let rules = match &cli.common.manifest {
        Some(path) => MetadataRules::from_manifest(&read(path)?)
            .map_err(|e| data(format!("{}: {e}", path.display())))?,
        None => MetadataRules::default(),
    };
    let ctx = Ctx {
        common: &cli.common,
        schema,
        rules,
    };
    match &cli.command {
        Command::Score(a) => cmd_score(&ctx, a),
        Command::Compare(a) => cmd_compare(&ctx, a),
        Command::Stats { corpus } => cmd_stats(&ctx, corpus),
        Command::Validate { corpus } => cmd_validate(&ctx, corpus),
        Command::Gen(a) => cmd_gen(&ctx, a),
    }
}

fn setup(common: &Common) -> Result<(), CliError> {
    let level = log::LevelFilter::from_str(&common.log_level)
        .map_err(|_| CliError::Usage(format!("unknown log level {:?}", common.log_level)))?;
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match setup(&cli.common).and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("brat-eval: {msg}");
            }
            ExitCode::from(e.code())
        }
    }
}
