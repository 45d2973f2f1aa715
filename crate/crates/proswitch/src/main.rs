//! Command-line front end for the proswitch pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use proswitch::data::{
    self, QARecord, SourceFormat,
};
use proswitch::error::{Error, Result};
use proswitch::gateway::{Gateway, GatewayConfig};
use proswitch::lexicon::{build_lexicon, LexiconFormat, TermLexicon};
use proswitch::prompts::{FewShotExample, InstructionLevel, ModelProfile, Templates};
use proswitch::quality::{EmbeddingProvider, RemoteEmbeddingProvider, TrigramHashProvider};
use proswitch::report::{render_report, EvalReport, QualityScope, RenderFormat};
use proswitch::runner::{
    attach_references, load_questions, run_evaluation, AnswerSet, AnswerSource, RunOptions,
};
use proswitch::style::{fit_thresholds, human_eval_stats, Combiner, StyleLabel};
use proswitch::text::LengthUnit;

#[derive(Parser)]
#[command(name = "proswitch", version, about = "Professional/non-professional answer style pipeline")]
struct Cli {
    /// key=value settings file (CLI flags win over it)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for all randomized steps
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON object file scripting the LLM: longest key contained in the
    /// prompt selects the reply
    #[arg(long, global = true, value_name = "FILE")]
    mock: Option<PathBuf>,
    /// Response cache directory for LLM calls
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Maximum concurrent LLM calls / worker threads
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and cache domain term lexicons
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Ingest, classify, augment, balance and emit QA corpora
    #[command(subcommand)]
    Data(DataCmd),
    /// Run evaluations and render reports
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Fit classification thresholds from labeled (term_hits,
    /// reasoning_steps) pairs
    FitThresholds(FitThresholdsArgs),
    /// Mean score and success rate of 1-5 human ratings
    HumanStats(HumanStatsArgs),
}

#[derive(Subcommand)]
enum LexiconCmd {
    /// Parse a term source and write the lexicon cache
    Build {
        #[arg(long)]
        input: PathBuf,
        /// mesh-xml or plain-list
        #[arg(long, default_value = "plain-list")]
        format: LexiconFormat,
        /// Domain identifier stored in the cache
        #[arg(long, default_value = "default")]
        domain: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DataCmd {
    /// Parse a source corpus into the unified record format
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// bioasq, pubmedqa or jsonl
        #[arg(long)]
        format: SourceFormat,
        #[arg(long)]
        out: PathBuf,
        /// Where to write per-record skip reasons
        #[arg(long)]
        skipped_out: Option<PathBuf>,
    },
    /// Fill in missing question types via the LLM
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write records the LLM could not type
        #[arg(long)]
        manual_review: Option<PathBuf>,
    },
    /// Generate the opposite-style twin of every record
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also copy the input records into the output
        #[arg(long)]
        include_originals: bool,
        /// JSON Lines of {question, answer, style} demonstrations
        #[arg(long)]
        few_shot: Option<PathBuf>,
    },
    /// Plan (and optionally execute) balancing to a target total
    Balance {
        #[arg(long)]
        input: PathBuf,
        /// Target corpus size; must be a multiple of 8
        #[arg(long)]
        target: usize,
        /// Where to write the balance plan as JSON
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Execute the plan and write the balanced corpus here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render records as instruction-tuning JSON Lines
    Emit {
        #[arg(long)]
        input: PathBuf,
        /// basic, type_based or knowledge_enriched
        #[arg(long, default_value = "basic")]
        level: InstructionLevel,
        #[arg(long)]
        out: PathBuf,
        /// Hold out this many records as a stratified test split
        #[arg(long)]
        test_split: Option<usize>,
        /// Where to write the held-out records
        #[arg(long)]
        test_out: Option<PathBuf>,
        /// Template override file ([key] sections)
        #[arg(long)]
        templates: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum EvalCmd {
    /// Evaluate a model over a question set
    Run(EvalRunArgs),
    /// Re-render a stored report
    Report {
        /// Report JSON produced by `eval run`
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "table-text")]
        format: RenderFormat,
        /// Write here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EvalRunArgs {
    /// JSON Lines of {id, question, qtype?, snippet?, reference?}
    #[arg(long)]
    questions: PathBuf,
    /// Lexicon cache (or plain term list) for term hits
    #[arg(long)]
    lexicon: PathBuf,
    /// Pre-generated answers {question_id, style, run?, text}; without
    /// this the gateway generates them
    #[arg(long)]
    answers: Option<PathBuf>,
    /// JSON Lines of {question_id, text} reference answers
    #[arg(long)]
    references: Option<PathBuf>,
    /// Per-record measurement dump (always written)
    #[arg(long)]
    records_out: PathBuf,
    /// Canonical report JSON
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// Rendering for stdout: json, csv or table-text
    #[arg(long, default_value = "json")]
    format: RenderFormat,
    #[arg(long)]
    model_name: Option<String>,
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long)]
    level: Option<InstructionLevel>,
    #[arg(long)]
    profile: Option<ModelProfile>,
    #[arg(long)]
    quality_scope: Option<QualityScope>,
    #[arg(long)]
    bleu_m: Option<u32>,
    #[arg(long)]
    runs: Option<u32>,
    /// Term-hit threshold for professional classification
    #[arg(long)]
    th: Option<u32>,
    /// Reasoning-step threshold for professional classification
    #[arg(long)]
    rs: Option<u32>,
    /// AND or OR
    #[arg(long)]
    combiner: Option<Combiner>,
    /// characters or whitespace_tokens
    #[arg(long)]
    length_unit: Option<LengthUnit>,
    /// Template override file ([key] sections)
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct FitThresholdsArgs {
    /// JSON Lines of {term_hits, reasoning_steps, style}
    #[arg(long)]
    input: PathBuf,
    /// Also dump the labeled points as scatter-friendly CSV
    #[arg(long)]
    points_csv: Option<PathBuf>,
}

#[derive(Args)]
struct HumanStatsArgs {
    /// Text file with one 1-5 rating per line
    #[arg(long)]
    input: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Lexicon(cmd) => run_lexicon(&cli, cmd),
        Command::Data(cmd) => run_data(&cli, cmd),
        Command::Eval(cmd) => run_eval(&cli, cmd),
        Command::FitThresholds(args) => run_fit_thresholds(args),
        Command::HumanStats(args) => run_human_stats(args),
    }
}

fn run_lexicon(_cli: &Cli, cmd: &LexiconCmd) -> Result<()> {
    match cmd {
        LexiconCmd::Build {
            input,
            format,
            domain,
            out,
        } => {
            let lexicon = build_lexicon(input, *format, domain)?;
            lexicon.save_cache(out)?;
            println!(
                "{}",
                serde_json::json!({
                    "domain": lexicon.domain_id(),
                    "terms": lexicon.len(),
                    "digest": lexicon.source_digest(),
                })
            );
            Ok(())
        }
    }
}

fn run_data(cli: &Cli, cmd: &DataCmd) -> Result<()> {
    match cmd {
        DataCmd::Ingest {
            input,
            format,
            out,
            skipped_out,
        } => {
            let outcome = data::ingest(input, *format)?;
            write_jsonl(out, &outcome.records)?;
            if let Some(path) = skipped_out {
                write_jsonl(path, &outcome.skipped)?;
            }
            for s in &outcome.skipped {
                eprintln!("skipped {}: {}", s.locator, s.reason);
            }
            println!(
                "{}",
                serde_json::json!({
                    "records": outcome.records.len(),
                    "skipped": outcome.skipped.len(),
                })
            );
            Ok(())
        }
        DataCmd::Classify {
            input,
            out,
            manual_review,
        } => {
            let records: Vec<QARecord> = read_jsonl(input)?;
            let gateway = build_gateway(cli)?;
            let outcome =
                data::classify_corpus(&records, &gateway, &Templates::builtin(), workers(cli))?;
            write_jsonl(out, &outcome.classified)?;
            if let Some(path) = manual_review {
                write_jsonl(path, &outcome.manual_review)?;
            }
            for entry in &outcome.manual_review {
                eprintln!("manual review {}: {}", entry.id, entry.reason);
            }
            println!(
                "{}",
                serde_json::json!({
                    "classified": outcome.classified.len(),
                    "manual_review": outcome.manual_review.len(),
                })
            );
            Ok(())
        }
        DataCmd::Augment {
            input,
            out,
            include_originals,
            few_shot,
        } => {
            let records: Vec<QARecord> = read_jsonl(input)?;
            let few_shot: Vec<FewShotExample> = match few_shot {
                Some(path) => read_jsonl(path)?,
                None => Vec::new(),
            };
            let gateway = build_gateway(cli)?;
            let templates = Templates::builtin();
            let results = data::parallel_map(&records, workers(cli), |record| {
                data::augment(
                    record,
                    record.style.opposite(),
                    &gateway,
                    &templates,
                    &few_shot,
                )
            });
            let mut twins = Vec::with_capacity(results.len());
            for r in results {
                twins.push(r?);
            }
            let mut output: Vec<QARecord> = if *include_originals {
                records.iter().cloned().chain(twins).collect()
            } else {
                twins
            };
            output.sort_by(|a, b| a.id.cmp(&b.id));
            write_jsonl(out, &output)?;
            println!("{}", serde_json::json!({ "records": output.len() }));
            Ok(())
        }
        DataCmd::Balance {
            input,
            target,
            plan_out,
            out,
        } => {
            let records: Vec<QARecord> = read_jsonl(input)?;
            let plan = data::balance_corpus(&records, *target, cli.seed.unwrap_or(0))?;
            if let Some(path) = plan_out {
                std::fs::write(path, serde_json::to_string_pretty(&plan)? + "\n")?;
            }
            let requests = plan.requests().count();
            if let Some(path) = out {
                let gateway = build_gateway(cli)?;
                let balanced = data::execute_plan(
                    &plan,
                    &records,
                    &gateway,
                    &Templates::builtin(),
                    workers(cli),
                )?;
                write_jsonl(path, &balanced)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "target": plan.target_total,
                    "quota": plan.quota,
                    "requests": requests,
                })
            );
            Ok(())
        }
        DataCmd::Emit {
            input,
            level,
            out,
            test_split,
            test_out,
            templates,
        } => {
            let records: Vec<QARecord> = read_jsonl(input)?;
            let templates = load_templates(templates.as_deref())?;
            let (train, test) = match test_split {
                Some(n) => data::split_test_set(&records, *n, cli.seed.unwrap_or(0))?,
                None => (records, Vec::new()),
            };
            if !test.is_empty() {
                let path = test_out.as_ref().ok_or_else(|| {
                    Error::Input("--test-split needs --test-out".into())
                })?;
                write_jsonl(path, &test)?;
            }
            let emitted = data::emit_training_set(&train, *level, &templates, out)?;
            println!(
                "{}",
                serde_json::json!({ "examples": emitted, "held_out": test.len() })
            );
            Ok(())
        }
    }
}

fn run_eval(cli: &Cli, cmd: &EvalCmd) -> Result<()> {
    match cmd {
        EvalCmd::Run(args) => {
            let mut questions = load_questions(&args.questions)?;
            if let Some(path) = &args.references {
                attach_references(&mut questions, path)?;
            }
            let lexicon = load_lexicon(&args.lexicon)?;
            let gateway = build_gateway(cli)?;
            let source = match &args.answers {
                Some(path) => AnswerSource::Answers(AnswerSet::from_jsonl(path)?),
                None => AnswerSource::Gateway(&gateway),
            };
            let options = eval_options(cli, args)?;
            let templates = load_templates(args.templates.as_deref())?;
            let has_references = questions.iter().any(|q| q.reference.is_some());
            let embedder = build_embedder(cli, has_references)?;
            let report = run_evaluation(
                &questions,
                &source,
                &lexicon,
                &gateway,
                embedder.as_ref(),
                &templates,
                &options,
                &args.records_out,
            )?;
            if let Some(path) = &args.report_out {
                std::fs::write(path, render_report(&report, RenderFormat::Json)?)?;
            }
            print!("{}", render_report(&report, args.format)?);
            Ok(())
        }
        EvalCmd::Report { input, format, out } => {
            let content = std::fs::read_to_string(input)?;
            let report: EvalReport = serde_json::from_str(&content)
                .map_err(|e| Error::Input(format!("{}: {e}", input.display())))?;
            let rendered = render_report(&report, *format)?;
            match out {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            Ok(())
        }
    }
}

fn run_fit_thresholds(args: &FitThresholdsArgs) -> Result<()> {
    #[derive(serde::Deserialize, serde::Serialize)]
    struct LabeledRow {
        term_hits: u32,
        reasoning_steps: u32,
        style: StyleLabel,
    }
    let rows: Vec<LabeledRow> = read_jsonl(&args.input)?;
    let labeled: Vec<(u32, u32, StyleLabel)> = rows
        .iter()
        .map(|r| (r.term_hits, r.reasoning_steps, r.style))
        .collect();
    let fit = fit_thresholds(&labeled)?;
    if let Some(path) = &args.points_csv {
        let mut csv = String::from("term_hits,reasoning_steps,style\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{}\n",
                r.term_hits, r.reasoning_steps, r.style
            ));
        }
        std::fs::write(path, csv)?;
    }
    println!("{}", serde_json::to_string(&fit)?);
    Ok(())
}

fn run_human_stats(args: &HumanStatsArgs) -> Result<()> {
    let content = std::fs::read_to_string(&args.input)?;
    let mut ratings = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rating: u32 = line
            .parse()
            .map_err(|_| Error::Input(format!("ratings line {}: not an integer", i + 1)))?;
        ratings.push(rating);
    }
    let (mean_score, success_rate) = human_eval_stats(&ratings)?;
    println!(
        "{}",
        serde_json::json!({
            "n": ratings.len(),
            "mean_score": mean_score,
            "success_rate": success_rate,
        })
    );
    Ok(())
}

/// Resolve evaluation options: defaults, then the --config file, then
/// explicit flags.
fn eval_options(cli: &Cli, args: &EvalRunArgs) -> Result<RunOptions> {
    let mut options = RunOptions::default();
    let file = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in &file {
        match key.as_str() {
            "model_name" => options.model_name = value.clone(),
            "dataset_name" => options.dataset_name = value.clone(),
            "level" => options.level = parse_setting(key, value)?,
            "profile" => options.profile = parse_setting(key, value)?,
            "quality_scope" => options.quality_scope = parse_setting(key, value)?,
            "bleu_m" => options.bleu_m = parse_setting(key, value)?,
            "runs" => options.config.runs = parse_setting(key, value)?,
            "th_threshold" => options.config.th_threshold = parse_setting(key, value)?,
            "rs_threshold" => options.config.rs_threshold = parse_setting(key, value)?,
            "combiner" => options.config.combiner = parse_setting(key, value)?,
            "length_unit" => options.config.length_unit = parse_setting(key, value)?,
            "seed" => options.seed = parse_setting(key, value)?,
            "concurrency" => options.concurrency = parse_setting(key, value)?,
            other => {
                return Err(Error::Input(format!("unknown config key: {other}")));
            }
        }
    }
    if let Some(v) = &args.model_name {
        options.model_name = v.clone();
    }
    if let Some(v) = &args.dataset_name {
        options.dataset_name = v.clone();
    }
    if let Some(v) = args.level {
        options.level = v;
    }
    if let Some(v) = args.profile {
        options.profile = v;
    }
    if let Some(v) = args.quality_scope {
        options.quality_scope = v;
    }
    if let Some(v) = args.bleu_m {
        options.bleu_m = v;
    }
    if let Some(v) = args.runs {
        options.config.runs = v;
    }
    if let Some(v) = args.th {
        options.config.th_threshold = v;
    }
    if let Some(v) = args.rs {
        options.config.rs_threshold = v;
    }
    if let Some(v) = args.combiner {
        options.config.combiner = v;
    }
    if let Some(v) = args.length_unit {
        options.config.length_unit = v;
    }
    if let Some(v) = cli.seed {
        options.seed = v;
    }
    if let Some(v) = cli.concurrency {
        options.concurrency = v;
    }
    options.config.validate()?;
    Ok(options)
}

fn parse_setting<T>(key: &str, value: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Input(format!("config key {key}: {e}")))
}

/// `key=value` per line; blank lines and `#` comments allowed.
fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let content = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Input(format!(
                "{} line {}: expected key=value",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn build_gateway(cli: &Cli) -> Result<Gateway> {
    let config = GatewayConfig {
        cache_dir: cli.cache_dir.clone(),
        max_in_flight: workers(cli),
        ..GatewayConfig::default()
    };
    match &cli.mock {
        Some(script) => Gateway::mock_from_script(script, config),
        None => Gateway::remote_from_env(config),
    }
}

/// Deterministic embeddings under --mock; otherwise the HTTP service from
/// PROSWITCH_EMBED_URL. Only needed when references are present.
fn build_embedder(cli: &Cli, required: bool) -> Result<Box<dyn EmbeddingProvider>> {
    if cli.mock.is_some() {
        return Ok(Box::new(TrigramHashProvider::default()));
    }
    match std::env::var("PROSWITCH_EMBED_URL") {
        Ok(url) => Ok(Box::new(RemoteEmbeddingProvider::new(
            url,
            std::env::var("PROSWITCH_API_KEY").ok(),
        ))),
        Err(_) if !required => Ok(Box::new(TrigramHashProvider::default())),
        Err(_) => Err(Error::Input(
            "references given but no embedding backend: set PROSWITCH_EMBED_URL or use --mock"
                .into(),
        )),
    }
}

fn workers(cli: &Cli) -> usize {
    cli.concurrency.unwrap_or(4).max(1)
}

/// Load a lexicon cache, or fall back to treating the file as a plain
/// term list.
fn load_lexicon(path: &Path) -> Result<TermLexicon> {
    let head = std::fs::read_to_string(path)?;
    if head.starts_with("#proswitch-lexicon") {
        TermLexicon::load_cache(path)
    } else {
        build_lexicon(path, LexiconFormat::PlainList, "adhoc")
    }
}

fn load_templates(path: Option<&Path>) -> Result<Templates> {
    match path {
        Some(p) => Templates::with_overrides_file(p),
        None => Ok(Templates::builtin()),
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: T = serde_json::from_str(line).map_err(|e| {
            Error::Input(format!("{} line {}: {e}", path.display(), i + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = String::new();
    for row in rows {
        buf.push_str(&serde_json::to_string(row)?);
        buf.push('\n');
    }
    std::fs::write(path, buf)?;
    Ok(())
}
