//! founderfit — command-line driver for the founder–idea fit pipeline.
//!
//! Subcommands mirror the pipeline phases: `ingest` normalizes CSV exports,
//! `index` embeds records and serves similarity queries, `evaluate` runs the
//! multi-expert protocol end to end, `report` re-renders stored reports, and
//! `config dump` prints the built-in defaults.
//!
//! Exit codes: 0 success, 2 usage or input problems, 3 pipeline failures
//! (a partial report is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use founderfit::config::{OutputFormat, PipelineConfig};
use founderfit::embed::{build_provider, EmbeddingProvider};
use founderfit::index::io::{load_index, save_index};
use founderfit::index::{EmbeddedFounder, EmbeddedIdea, FounderQuery, SimilarityIndex};
use founderfit::ingest::{ingest_founder_csv, parse_company_csv, MappingConfig, RejectedRow};
use founderfit::llm::{
    ChatBackend, Gateway, RemoteBackend, ReplayBackend, RetryPolicy, SessionMeta,
};
use founderfit::pipeline::{
    default_fit_features, run_evaluation, EvaluationRequest, FitMode, Strategy, TemplateSet,
};
use founderfit::records::{FounderProfile, FounderRecord, IdeaRecord, Outcome};
use founderfit::report::EvaluationReport;

#[derive(Parser)]
#[command(name = "founderfit", version, about = "Founder-idea fit evaluation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize founder and company CSV exports into JSONL record files.
    Ingest(IngestArgs),
    /// Build, inspect, or query a similarity index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Evaluate one founder-idea pair end to end.
    Evaluate(EvaluateArgs),
    /// Re-render a stored evaluation report.
    Report(ReportArgs),
    /// Print built-in configuration defaults.
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Args)]
struct IngestArgs {
    /// CSV of founders whose startups succeeded.
    #[arg(long, value_name = "CSV")]
    founders_success: Option<PathBuf>,
    /// CSV of founders whose startups failed.
    #[arg(long, value_name = "CSV")]
    founders_fail: Option<PathBuf>,
    /// CSV of companies that succeeded.
    #[arg(long, value_name = "CSV")]
    companies_success: Option<PathBuf>,
    /// CSV of companies that failed.
    #[arg(long, value_name = "CSV")]
    companies_fail: Option<PathBuf>,
    /// Mapping-table override (TOML).
    #[arg(long, value_name = "TOML")]
    mapping: Option<PathBuf>,
    /// Top-institution list override (one name per line).
    #[arg(long, value_name = "TXT")]
    top_institutions: Option<PathBuf>,
    /// Where founders.jsonl / ideas.jsonl / rejects.jsonl are written.
    #[arg(long, default_value = "data")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Embed normalized records and write an index file.
    Build(IndexBuildArgs),
    /// Print record counts and embedding dimension.
    Stats {
        #[arg(long)]
        index: PathBuf,
    },
    /// Retrieve the most similar founders and assemble the panel.
    Query(IndexQueryArgs),
}

#[derive(Args)]
struct IndexBuildArgs {
    /// founders.jsonl from `ingest`.
    #[arg(long)]
    founders: Option<PathBuf>,
    /// ideas.jsonl from `ingest`.
    #[arg(long)]
    ideas: Option<PathBuf>,
    /// Pipeline config (embedding settings come from here).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output index file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexQueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    founder: FounderInput,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Neighbors per outcome class.
    #[arg(short, long)]
    k: Option<usize>,
}

/// A founder given either as a JSON file or assembled from flags.
#[derive(Args)]
struct FounderInput {
    /// Founder profile JSON (normalized record shape).
    #[arg(long, value_name = "JSON")]
    founder: Option<PathBuf>,
    /// Inline founder biography text.
    #[arg(long)]
    description: Option<String>,
    /// Highest degree level: 0 none, 1 bachelors, 2 masters, 3 PhD.
    #[arg(long, default_value_t = 0)]
    degree: u8,
    /// The founder attended a top institution.
    #[arg(long)]
    top_institution: bool,
    /// Major category codes 0-11, comma separated.
    #[arg(long, value_delimiter = ',')]
    majors: Vec<u8>,
    /// Prior jobs as one display string.
    #[arg(long)]
    jobs: Option<String>,
}

impl FounderInput {
    fn resolve(&self) -> Result<FounderProfile> {
        if let Some(path) = &self.founder {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read founder file {}", path.display()))?;
            // Accept either a bare profile or a full labelled record.
            let profile = serde_json::from_str::<FounderProfile>(&text).or_else(|profile_err| {
                serde_json::from_str::<FounderRecord>(&text)
                    .map(|r| r.profile)
                    .map_err(|_| {
                        anyhow!("{} is not a founder profile: {profile_err}", path.display())
                    })
            })?;
            profile.validate().map_err(|reason| anyhow!(reason))?;
            return Ok(profile);
        }
        let description = self
            .description
            .clone()
            .ok_or_else(|| anyhow!("provide --founder FILE or --description TEXT"))?;
        let profile = FounderProfile {
            id: "cli-founder".into(),
            description,
            highest_degree: self.degree,
            top_institution: self.top_institution,
            majors: self.majors.iter().copied().collect(),
            prior_jobs: self.jobs.clone().unwrap_or_default(),
        };
        profile.validate().map_err(|reason| anyhow!(reason))?;
        Ok(profile)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    founder: FounderInput,
    /// The business idea, inline.
    #[arg(long)]
    idea_text: Option<String>,
    /// The business idea, from a file.
    #[arg(long)]
    idea_file: Option<PathBuf>,
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record the LLM session to this file for later replay.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Serve LLM responses from a recorded session instead of a backend.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// With --replay, require prompts to match the recording exactly.
    #[arg(long)]
    replay_strict: bool,
    /// Prompting strategy: tot (multi-expert) or cot (single chain).
    #[arg(long)]
    strategy: Option<String>,
    /// Fit scoring: llm or embedding.
    #[arg(long)]
    fit_mode: Option<String>,
    /// Stdout report format: json or markdown.
    #[arg(long)]
    format: Option<String>,
    /// Neighbors per outcome class.
    #[arg(short, long)]
    k: Option<usize>,
    /// Report directory root (overrides the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also run the pros/cons summary stage.
    #[arg(long)]
    summarize: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a stored report.json.
    #[arg(long)]
    input: PathBuf,
    /// Output format: json (byte-identical passthrough) or markdown.
    #[arg(long, default_value = "markdown")]
    format: String,
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Print a default configuration document.
    Dump {
        /// pipeline | mapping | fit-features | institutions
        #[arg(long, default_value = "pipeline")]
        kind: String,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Index(IndexCommand::Build(args)) => cmd_index_build(args),
        Command::Index(IndexCommand::Stats { index }) => cmd_index_stats(&index),
        Command::Index(IndexCommand::Query(args)) => cmd_index_query(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(args) => cmd_report(args),
        Command::Config(ConfigCommand::Dump { kind }) => cmd_config_dump(&kind),
    }
}

fn load_mapping(args: &IngestArgs) -> Result<MappingConfig> {
    let mut mapping = match &args.mapping {
        Some(path) => MappingConfig::from_toml_file(path)?,
        None => MappingConfig::default(),
    };
    if let Some(path) = &args.top_institutions {
        mapping = mapping.with_top_institutions_file(path)?;
    }
    Ok(mapping)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(line)
                .with_context(|| format!("{} line {}: bad record", path.display(), i + 1))?,
        );
    }
    Ok(rows)
}

fn cmd_ingest(args: IngestArgs) -> Result<ExitCode> {
    if args.founders_success.is_none()
        && args.founders_fail.is_none()
        && args.companies_success.is_none()
        && args.companies_fail.is_none()
    {
        bail!("nothing to ingest: pass at least one --founders-* or --companies-* CSV");
    }
    let mapping = load_mapping(&args)?;
    let mut founders: Vec<FounderRecord> = Vec::new();
    let mut ideas: Vec<IdeaRecord> = Vec::new();
    let mut rejects: Vec<RejectedRow> = Vec::new();

    for (path, outcome) in [
        (&args.founders_success, Outcome::Success),
        (&args.founders_fail, Outcome::Failure),
    ] {
        if let Some(path) = path {
            let parsed = ingest_founder_csv(path, outcome, &mapping)?;
            founders.extend(parsed.rows);
            rejects.extend(parsed.rejects);
        }
    }
    for (path, outcome) in [
        (&args.companies_success, Outcome::Success),
        (&args.companies_fail, Outcome::Failure),
    ] {
        if let Some(path) = path {
            let parsed = parse_company_csv(path, outcome)?;
            ideas.extend(parsed.rows);
            rejects.extend(parsed.rejects);
        }
    }

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    write_jsonl(&args.out_dir.join("founders.jsonl"), &founders)?;
    write_jsonl(&args.out_dir.join("ideas.jsonl"), &ideas)?;
    write_jsonl(&args.out_dir.join("rejects.jsonl"), &rejects)?;

    let count = |rows: &[FounderRecord], o: Outcome| rows.iter().filter(|r| r.outcome == o).count();
    let icount = |rows: &[IdeaRecord], o: Outcome| rows.iter().filter(|r| r.outcome == o).count();
    println!(
        "{} success founders, {} failure founders",
        count(&founders, Outcome::Success),
        count(&founders, Outcome::Failure)
    );
    println!(
        "{} success ideas, {} failure ideas",
        icount(&ideas, Outcome::Success),
        icount(&ideas, Outcome::Failure)
    );
    println!("{} rejected rows (rejects.jsonl)", rejects.len());
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    let mut config = match path {
        Some(path) => PipelineConfig::from_toml_file(path)?,
        None => PipelineConfig::default(),
    };
    config.apply_env();
    Ok(config)
}

fn cmd_index_build(args: IndexBuildArgs) -> Result<ExitCode> {
    if args.founders.is_none() && args.ideas.is_none() {
        bail!("nothing to index: pass --founders and/or --ideas");
    }
    let config = load_config(&args.config)?;
    let provider = build_provider(&config.embedding)?;
    let mut index = SimilarityIndex::new(config.embedding.dim);

    let mut n_founders = 0;
    if let Some(path) = &args.founders {
        let records: Vec<FounderRecord> = read_jsonl(path)?;
        let descs: Vec<String> = records.iter().map(|r| r.profile.description.clone()).collect();
        let jobs: Vec<String> = records
            .iter()
            .map(|r| r.profile.jobs_embedding_text().to_string())
            .collect();
        let desc_vecs = provider.embed(&descs)?;
        let jobs_vecs = provider.embed(&jobs)?;
        n_founders = records.len();
        for ((record, desc_vec), jobs_vec) in records.into_iter().zip(desc_vecs).zip(jobs_vecs) {
            index.add_founder(EmbeddedFounder {
                record,
                desc_vec,
                jobs_vec,
            })?;
        }
    }
    let mut n_ideas = 0;
    if let Some(path) = &args.ideas {
        let records: Vec<IdeaRecord> = read_jsonl(path)?;
        let descs: Vec<String> = records.iter().map(|r| r.description.clone()).collect();
        let desc_vecs = provider.embed(&descs)?;
        n_ideas = records.len();
        for (record, desc_vec) in records.into_iter().zip(desc_vecs) {
            index.add_idea(EmbeddedIdea { record, desc_vec })?;
        }
    }

    save_index(&index, &args.out)?;
    println!(
        "indexed {n_founders} founders, {n_ideas} ideas (dim {})",
        index.dim()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_index_stats(path: &Path) -> Result<ExitCode> {
    let index = load_index(path, None)?;
    println!("dim: {}", index.dim());
    println!(
        "founders: {} success, {} failure",
        index.founder_count_by_outcome(Outcome::Success),
        index.founder_count_by_outcome(Outcome::Failure)
    );
    println!(
        "ideas: {} success, {} failure",
        index.idea_count_by_outcome(Outcome::Success),
        index.idea_count_by_outcome(Outcome::Failure)
    );
    Ok(ExitCode::SUCCESS)
}

fn embed_founder_query(
    profile: FounderProfile,
    provider: &dyn EmbeddingProvider,
) -> Result<FounderQuery> {
    let texts = vec![
        profile.description.clone(),
        profile.jobs_embedding_text().to_string(),
    ];
    let mut vectors = provider.embed(&texts)?;
    let jobs_vec = vectors.pop().expect("two vectors");
    let desc_vec = vectors.pop().expect("two vectors");
    Ok(FounderQuery {
        profile,
        desc_vec,
        jobs_vec,
    })
}

fn cmd_index_query(args: IndexQueryArgs) -> Result<ExitCode> {
    let config = load_config(&args.config)?;
    let index = load_index(&args.index, Some(config.embedding.dim))?;
    let provider = build_provider(&config.embedding)?;
    let profile = args.founder.resolve()?;
    let query = embed_founder_query(profile, provider.as_ref())?;
    let selection = index.nearest_founders(&query, args.k.unwrap_or(config.k))?;

    for (title, matches) in [
        ("successes:", &selection.successes),
        ("failures:", &selection.failures),
        ("panel:", &selection.panel),
    ] {
        println!("{title}");
        for m in matches {
            println!("  {}  {:.4}  ({})", m.record_id, m.score, m.outcome.label());
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Builds the chat gateway for an evaluation: replay file, or remote backend.
fn build_gateway(args: &EvaluateArgs, config: &PipelineConfig, config_hash: &str) -> Result<Gateway> {
    let backend: Box<dyn ChatBackend> = match &args.replay {
        Some(path) => Box::new(ReplayBackend::load(path, args.replay_strict)?),
        None => {
            if config.llm.endpoint.trim().is_empty() {
                bail!(
                    "no LLM endpoint configured: set LLM_ENDPOINT or [llm] endpoint in the \
                     config, or pass --replay SESSION"
                );
            }
            Box::new(RemoteBackend::new(config.llm.to_remote_config())?)
        }
    };
    let mut gateway = Gateway::new(backend).with_retry(RetryPolicy {
        max_retries: config.llm.max_retries,
        initial_backoff: Duration::from_millis(config.llm.initial_backoff_ms),
    });
    if let Some(path) = &args.record {
        gateway = gateway.record_to(
            path,
            SessionMeta {
                pipeline_version: env!("CARGO_PKG_VERSION").into(),
                config_hash: config_hash.to_string(),
            },
        )?;
    }
    Ok(gateway)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let mut config = load_config(&args.config)?;
    if let Some(s) = &args.strategy {
        config.strategy = s.parse::<Strategy>().map_err(|e| anyhow!(e))?;
    }
    if let Some(s) = &args.fit_mode {
        config.fit_mode = s.parse::<FitMode>().map_err(|e| anyhow!(e))?;
    }
    if let Some(s) = &args.format {
        config.output_format = s.parse::<OutputFormat>().map_err(|e| anyhow!(e))?;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if args.summarize {
        config.summarize = true;
    }
    config.validate()?;

    let founder = args.founder.resolve()?;
    let idea_text = match (&args.idea_text, &args.idea_file) {
        (Some(_), Some(_)) => bail!("pass either --idea-text or --idea-file, not both"),
        (Some(text), None) => text.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read idea file {}", path.display()))?,
        (None, None) => bail!("provide the idea with --idea-text or --idea-file"),
    };
    if idea_text.trim().is_empty() {
        bail!("the idea text is empty");
    }

    let config_hash = config.config_hash();
    let index = load_index(&args.index, Some(config.embedding.dim))?;
    let provider = build_provider(&config.embedding)?;
    let gateway = build_gateway(&args, &config, &config_hash)?;
    let templates = match &config.templates_dir {
        Some(dir) => TemplateSet::with_overrides(dir)?,
        None => TemplateSet::default(),
    };
    let options = config.to_pipeline_options()?;
    let request = EvaluationRequest {
        founder,
        idea_text: idea_text.trim().to_string(),
    };

    let mut run = run_evaluation(
        &index,
        provider.as_ref(),
        &gateway,
        &templates,
        &options,
        &request,
        &config_hash,
    );
    run.report.created_at = Some(iso_utc_now());
    if !config.include_transcripts {
        run.report.transcripts.clear();
    }

    // Content-addressed report directory: config hash + input hash.
    let input_hash = {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&request.founder)?);
        hasher.update(request.idea_text.as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect::<String>()
    };
    let report_dir = config.out_dir.join(format!("{config_hash}-{input_hash}"));
    std::fs::create_dir_all(&report_dir)
        .with_context(|| format!("cannot create {}", report_dir.display()))?;
    let json_path = report_dir.join("report.json");
    std::fs::write(&json_path, run.report.to_json())
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    let md_path = report_dir.join("report.md");
    std::fs::write(&md_path, run.report.to_markdown())
        .with_context(|| format!("cannot write {}", md_path.display()))?;

    match config.output_format {
        OutputFormat::Json => print!("{}", run.report.to_json()),
        OutputFormat::Markdown => print!("{}", run.report.to_markdown()),
    }
    eprintln!("report: {}", json_path.display());

    match run.failure {
        None => Ok(ExitCode::SUCCESS),
        Some(failure) => {
            eprintln!("pipeline failed: {failure}");
            Ok(ExitCode::from(3))
        }
    }
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let report = EvaluationReport::from_json(&text)?;
    match args.format.parse::<OutputFormat>().map_err(|e| anyhow!(e))? {
        // Byte-identical passthrough so hashes over stored reports hold.
        OutputFormat::Json => print!("{text}"),
        OutputFormat::Markdown => print!("{}", report.to_markdown()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_config_dump(kind: &str) -> Result<ExitCode> {
    match kind {
        "pipeline" => print!("{}", PipelineConfig::default().to_toml_string()),
        "mapping" => print!("{}", MappingConfig::default().to_toml_string()),
        "fit-features" => println!("{}", default_fit_features().join("\n")),
        "institutions" => println!("{}", MappingConfig::default().top_institutions().join("\n")),
        other => bail!("unknown dump kind `{other}` (pipeline|mapping|fit-features|institutions)"),
    }
    Ok(ExitCode::SUCCESS)
}

/// UTC timestamp (seconds precision) without a clock dependency.
fn iso_utc_now() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let (year, month, day) = civil_from_days((secs / 86_400) as i64);
    let rem = secs % 86_400;
    format!(
        "{year:04}-{month:02}-{day:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

/// Days-since-epoch to civil date (proleptic Gregorian).
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = (if mp < 10 { mp + 3 } else { mp - 9 }) as u32;
    let year = yoe as i64 + era * 400 + i64::from(month <= 2);
    (year, month, day)
}
