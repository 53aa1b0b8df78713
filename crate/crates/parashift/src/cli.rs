//! Command-line front end: `validate`, `translate`, `bench`, and `report`
//! subcommands over one TOML configuration document.
//!
//! Exit codes are part of the interface (scripts branch on them); the full
//! table is in `--help` via [`EXIT_CODES_HELP`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::backend::{ByteEstimator, ScriptedBackend};
use crate::bench::{
    load_rows, load_suite, render_report, render_summary, run_matrix, summarize, BackendSource,
    BenchError, MatrixConfig, ReportFormat, ResultRow, SimMetric, SuiteEntry, SuiteManifest,
    DEFAULT_RUNTIME_THRESHOLD, DEFAULT_SIM_THRESHOLD,
};
use crate::config::Config;
use crate::domain::{BaselineRecord, Direction, SessionStatus, ToolResult, TranslationTask};
use crate::pipeline::{run_pipeline, save_session, PipelineEnv};
use crate::prompt::SummaryCache;
use crate::toolchain::{validate_baseline, BaselineOutcome, BaselineStage, RunLimits};

/// Documented exit codes, shown under `--help`.
pub const EXIT_CODES_HELP: &str = "Exit codes:
  validate   0 all baselines pass; 1 a baseline failed; 2 configuration error
  translate  0 Success; 1 BaselineFailed; 2 configuration or infrastructure error;
             3 CompileBudgetExceeded; 4 ExecBudgetExceeded; 5 ExtractionFailed;
             6 ContextOverflow
  bench      0 matrix completed (failed cells are data); 1 infrastructure error;
             2 configuration error; 4 manifest error
  report     0 rendered; 5 missing or corrupt result rows";

#[derive(Debug, Parser)]
#[command(
    name = "parashift",
    about = "Translate parallel code between frameworks with a self-correcting LLM loop",
    after_help = EXIT_CODES_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile and run the reference code pairs to prove the toolchain works.
    Validate(ValidateArgs),
    /// Run one translation session and persist its artifacts.
    Translate(TranslateArgs),
    /// Run the full (app x llm x direction) benchmark matrix.
    Bench(BenchArgs),
    /// Re-render reports and summaries from persisted result rows.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Suite manifest (defaults to the one named in the config).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Only validate this app.
    #[arg(long)]
    app: Option<String>,
    /// Only validate this direction, e.g. `openmp->cuda` (default: every
    /// ordered language pair in the manifest).
    #[arg(long)]
    direction: Option<Direction>,
    /// Working directory root (defaults to the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Suite manifest (defaults to the one named in the config).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// App to translate (an entry in the manifest).
    #[arg(long)]
    app: String,
    /// Translation direction, e.g. `openmp->cuda`.
    #[arg(long)]
    direction: Direction,
    /// LLM profile name from the config.
    #[arg(long)]
    llm: String,
    /// Output directory root (defaults to the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the correction budget for this run.
    #[arg(long)]
    max_self_corr: Option<u32>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Suite manifest (defaults to the one named in the config).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory (defaults to the config's output_dir). Holds
    /// `rows/`, `sessions/`, the rendered reports, and `summary.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Matrix cells run in parallel on this many workers.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Restrict to these LLM profiles (repeatable; default: all configured).
    #[arg(long)]
    llm: Vec<String>,
    /// Restrict to these directions (repeatable; default: every ordered
    /// language pair in the manifest).
    #[arg(long)]
    direction: Vec<Direction>,
    /// Override the correction budget for every cell.
    #[arg(long)]
    max_self_corr: Option<u32>,
    /// Ratio bound counted as "within runtime threshold" in the summary.
    #[arg(long, default_value_t = DEFAULT_RUNTIME_THRESHOLD)]
    runtime_threshold: f64,
    /// Similarity bound used in the summary.
    #[arg(long, default_value_t = DEFAULT_SIM_THRESHOLD)]
    sim_threshold: f64,
    /// Similarity column the summary thresholds on: token or line.
    #[arg(long, default_value = "token")]
    sim_metric: SimMetric,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Bench output directory containing `rows/`.
    #[arg(long)]
    out: PathBuf,
    /// Report format: csv, json, or markdown.
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    /// Ratio bound counted as "within runtime threshold" in the summary.
    #[arg(long, default_value_t = DEFAULT_RUNTIME_THRESHOLD)]
    runtime_threshold: f64,
    /// Similarity bound used in the summary.
    #[arg(long, default_value_t = DEFAULT_SIM_THRESHOLD)]
    sim_threshold: f64,
    /// Similarity column the summary thresholds on: token or line.
    #[arg(long, default_value = "token")]
    sim_metric: SimMetric,
}

/// Entry point for the binary: parses `std::env::args` and runs.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Testable entry point; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Translate(args) => cmd_translate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Report(args) => cmd_report(args),
    }
}

/// Exit code for a finished translation session; one code per terminal
/// status, stable for scripts.
pub fn status_exit_code(status: SessionStatus) -> i32 {
    match status {
        SessionStatus::Success => 0,
        SessionStatus::BaselineFailed => 1,
        SessionStatus::CompileBudgetExceeded => 3,
        SessionStatus::ExecBudgetExceeded => 4,
        SessionStatus::ExtractionFailed => 5,
        SessionStatus::ContextOverflow => 6,
    }
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

fn load_config(path: &Path) -> Result<Config, i32> {
    Config::load(path).map_err(|e| fail(2, e))
}

fn manifest_for(
    config: &Config,
    override_path: Option<&Path>,
    missing_code: i32,
) -> Result<SuiteManifest, i32> {
    let path = override_path
        .map(Path::to_path_buf)
        .or_else(|| config.manifest_path.clone())
        .ok_or_else(|| {
            fail(
                missing_code,
                "no manifest given (--manifest or [paths].manifest)",
            )
        })?;
    load_suite(&path).map_err(|e| fail(missing_code, e))
}

/// Every ordered language pair of the manifest, in declaration order.
fn all_directions(manifest: &SuiteManifest) -> Vec<Direction> {
    let mut directions = Vec::new();
    for source in &manifest.languages {
        for target in &manifest.languages {
            if source != target {
                directions.push(Direction::new(source, target));
            }
        }
    }
    directions
}

fn read_task(entry: &SuiteEntry, direction: &Direction) -> Result<TranslationTask, String> {
    let read = |language: &str| -> Result<String, String> {
        let path = entry
            .sources
            .get(language)
            .ok_or_else(|| format!("entry `{}` has no source for `{language}`", entry.app_name))?;
        std::fs::read_to_string(path).map_err(|e| format!("failed to read {}: {e}", path.display()))
    };
    Ok(TranslationTask {
        app_name: entry.app_name.clone(),
        direction: direction.clone(),
        source_code: read(&direction.source)?,
        reference_target_code: Some(read(&direction.target)?),
        runtime_args: entry.runtime_args.clone(),
    })
}

/// The tool result of the stage that failed, for echoing diagnostics.
fn stage_result<'a>(stage: BaselineStage, record: &'a BaselineRecord) -> Option<&'a ToolResult> {
    match stage {
        BaselineStage::SourceCompile => record.source_compile.as_ref(),
        BaselineStage::SourceExecute => record.source_execute.as_ref(),
        BaselineStage::TargetCompile => record.target_compile.as_ref(),
        BaselineStage::TargetExecute => record.target_execute.as_ref(),
    }
}

fn cmd_validate(args: ValidateArgs) -> i32 {
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let manifest = match manifest_for(&config, args.manifest.as_deref(), 2) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let directions = match &args.direction {
        Some(d) => vec![d.clone()],
        None => all_directions(&manifest),
    };
    for direction in &directions {
        for language in [&direction.source, &direction.target] {
            if let Err(e) = config.language(language) {
                return fail(2, e);
            }
        }
    }
    let entries: Vec<&SuiteEntry> = manifest
        .entries
        .iter()
        .filter(|e| args.app.as_ref().is_none_or(|app| *app == e.app_name))
        .collect();
    if entries.is_empty() {
        return fail(2, "no matching manifest entries to validate");
    }

    let out_root = args
        .out
        .unwrap_or_else(|| config.output_dir.clone())
        .join("validate");
    let limits = RunLimits {
        compile_timeout_s: config.loop_cfg.compile_timeout_s,
        exec_timeout_s: config.loop_cfg.exec_timeout_s,
        n_runtime_runs: config.loop_cfg.n_runtime_runs,
    };
    let lock = config.loop_cfg.resource_lock.clone();
    let mut all_ok = true;
    for entry in entries {
        for direction in &directions {
            let label = format!("{} ({direction})", entry.app_name);
            let task = match read_task(entry, direction) {
                Ok(t) => t,
                Err(message) => {
                    println!("FAIL {label}: {message}");
                    all_ok = false;
                    continue;
                }
            };
            let workdir = out_root.join(format!(
                "{}__{}-to-{}",
                entry.app_name, direction.source, direction.target
            ));
            let outcome = validate_baseline(
                &task,
                &config.languages[&direction.source],
                &config.languages[&direction.target],
                &workdir,
                &limits,
                lock.as_deref(),
            );
            match outcome {
                Ok(BaselineOutcome::Ok(_)) => println!("ok   {label}"),
                Ok(BaselineOutcome::Failed { stage, record }) => {
                    println!("FAIL {label}: {stage} failed");
                    if let Some(result) = stage_result(stage, &record) {
                        let diagnostics = if result.stderr.is_empty() {
                            &result.stdout
                        } else {
                            &result.stderr
                        };
                        eprint!("{diagnostics}");
                        if !diagnostics.ends_with('\n') && !diagnostics.is_empty() {
                            eprintln!();
                        }
                    }
                    all_ok = false;
                }
                Err(e) => {
                    println!("FAIL {label}: {e}");
                    all_ok = false;
                }
            }
        }
    }
    if all_ok {
        0
    } else {
        1
    }
}

fn cmd_translate(args: TranslateArgs) -> i32 {
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let manifest = match manifest_for(&config, args.manifest.as_deref(), 2) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let Some(entry) = manifest.entries.iter().find(|e| e.app_name == args.app) else {
        return fail(2, format!("no app `{}` in the manifest", args.app));
    };
    let direction = &args.direction;
    for language in [&direction.source, &direction.target] {
        if let Err(e) = config.language(language) {
            return fail(2, e);
        }
    }
    let llm = match config.llm(&args.llm) {
        Ok(l) => l,
        Err(e) => return fail(2, e),
    };
    let dict = match config.dictionary() {
        Ok(d) => d,
        Err(e) => return fail(2, e),
    };
    let task = match read_task(entry, direction) {
        Ok(t) => t,
        Err(message) => return fail(2, message),
    };

    let backend: Arc<dyn crate::backend::ChatBackend> = match llm.backend_source() {
        Ok(BackendSource::Shared(backend)) => backend,
        Ok(BackendSource::Scripted(book)) => match book.for_cell(&entry.app_name, direction) {
            Some(replies) => Arc::new(ScriptedBackend::new(replies.iter().cloned())),
            None => return fail(2, "no scripted replies for this app and direction"),
        },
        Err(e) => return fail(2, e),
    };

    let mut loop_cfg = config.loop_cfg.clone();
    if let Some(budget) = args.max_self_corr {
        loop_cfg.max_self_corr = budget;
    }
    let out_root = args.out.unwrap_or_else(|| config.output_dir.clone());
    let workdir = out_root.join("translate").join(format!(
        "{}__{}__{}-to-{}",
        entry.app_name, args.llm, direction.source, direction.target
    ));

    let cache = SummaryCache::new();
    let env = PipelineEnv {
        backend: backend.as_ref(),
        profile: &llm.profile,
        estimator: &ByteEstimator,
        dict: &dict,
        source_spec: &config.languages[&direction.source],
        target_spec: &config.languages[&direction.target],
        cache: &cache,
        workdir: &workdir,
        cfg: &loop_cfg,
    };
    let record = match run_pipeline(&task, &env) {
        Ok(record) => record,
        Err(e) => return fail(2, e),
    };
    if let Err(e) = save_session(&record, &workdir) {
        return fail(2, e);
    }
    println!("status: {}", record.status);
    println!("self_corr: {}", record.self_corr);
    println!("artifacts: {}", workdir.display());
    status_exit_code(record.status)
}

fn bench_exit_code(e: &BenchError) -> i32 {
    match e {
        BenchError::UnknownLanguage { .. } => 2,
        BenchError::InvalidManifest { .. }
        | BenchError::MissingManifestLanguage { .. }
        | BenchError::Parse { .. } => 4,
        _ => 1,
    }
}

fn cmd_bench(args: BenchArgs) -> i32 {
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let manifest = match manifest_for(&config, args.manifest.as_deref(), 4) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let llms = if args.llm.is_empty() {
        match config.bench_llms() {
            Ok(llms) if !llms.is_empty() => llms,
            Ok(_) => return fail(2, "no llm profiles configured"),
            Err(e) => return fail(2, e),
        }
    } else {
        let mut llms = Vec::new();
        for name in &args.llm {
            match config.llm(name).and_then(|l| l.bench_llm()) {
                Ok(llm) => llms.push(llm),
                Err(e) => return fail(2, e),
            }
        }
        llms
    };
    let directions = if args.direction.is_empty() {
        all_directions(&manifest)
    } else {
        args.direction.clone()
    };
    let dict = match config.dictionary() {
        Ok(d) => d,
        Err(e) => return fail(2, e),
    };
    let mut loop_cfg = config.loop_cfg.clone();
    if let Some(budget) = args.max_self_corr {
        loop_cfg.max_self_corr = budget;
    }
    let out_dir = args.out.unwrap_or_else(|| config.output_dir.clone());
    let matrix_cfg = MatrixConfig {
        languages: config.languages.clone(),
        dict,
        loop_cfg,
        out_dir: out_dir.clone(),
        workers: args.workers,
    };

    let rows = match run_matrix(&manifest, &llms, &directions, &matrix_cfg) {
        Ok(rows) => rows,
        Err(e) => {
            let code = bench_exit_code(&e);
            return fail(code, e);
        }
    };

    let summary = summaries_by_direction(
        &rows,
        args.runtime_threshold,
        args.sim_threshold,
        args.sim_metric,
    );
    print!("{summary}");
    let outputs = [
        ("report.csv", render_report(&rows, ReportFormat::Csv)),
        ("report.json", render_report(&rows, ReportFormat::Json)),
        ("report.md", render_report(&rows, ReportFormat::Markdown)),
        ("summary.txt", summary),
    ];
    for (name, content) in outputs {
        let path = out_dir.join(name);
        if let Err(e) = std::fs::write(&path, content) {
            return fail(1, format!("failed to write {}: {e}", path.display()));
        }
    }
    println!("reports written to {}", out_dir.display());
    0
}

/// One summary block per direction (row order), then an overall block when
/// there is more than one direction.
fn summaries_by_direction(
    rows: &[ResultRow],
    runtime_threshold: f64,
    sim_threshold: f64,
    sim_metric: SimMetric,
) -> String {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<ResultRow>> = BTreeMap::new();
    for row in rows {
        let key = row.direction.to_string();
        if !grouped.contains_key(&key) {
            order.push(key.clone());
        }
        grouped.entry(key).or_default().push(row.clone());
    }
    let mut out = String::new();
    for key in &order {
        let stats = summarize(&grouped[key], runtime_threshold, sim_threshold, sim_metric);
        out.push_str(&render_summary(key, &stats));
    }
    if order.len() > 1 {
        let stats = summarize(rows, runtime_threshold, sim_threshold, sim_metric);
        out.push_str(&render_summary("all directions", &stats));
    }
    out
}

fn cmd_report(args: ReportArgs) -> i32 {
    let rows = match load_rows(&args.out.join("rows")) {
        Ok(rows) => rows,
        Err(e) => return fail(5, e),
    };
    print!(
        "{}",
        summaries_by_direction(
            &rows,
            args.runtime_threshold,
            args.sim_threshold,
            args.sim_metric
        )
    );
    print!("{}", render_report(&rows, args.format));
    0
}
