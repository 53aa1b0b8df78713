//! Benchmark matrices over a suite manifest: one translation session per
//! (app, LLM, direction) cell, resumable row persistence, summary statistics,
//! and CSV / JSON / Markdown reports.
//!
//! Completed cells are stored as individual JSON files under
//! `<out_dir>/rows/`, keyed by a fingerprint of the cell configuration, so an
//! interrupted matrix picks up where it left off. Cell failures are data, not
//! errors: a failed translation becomes a [`RowOutcome::Failed`] row and the
//! matrix keeps going.
//!
//! The [`fixtures`] module bundles reference result tables used by the
//! report golden tests and the `fixture_report` example.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::backend::{ByteEstimator, ChatBackend, ScriptedBackend};
use crate::domain::{
    Direction, LanguageSpec, LlmProfile, MetricsRecord, OutputVerdict, SessionRecord,
    SessionStatus, TranslationTask,
};
use crate::metrics::{compare_output, render4, sim_l, sim_t, CompareMode};
use crate::pipeline::{run_pipeline, save_session, LoopConfig, PipelineEnv};
use crate::prompt::{PromptDictionary, SummaryCache};

/// Fraction-of-source-runtime bound counted as "within threshold": a ratio of
/// 0.9091 means the generated code runs at most 1.1x the source runtime.
pub const DEFAULT_RUNTIME_THRESHOLD: f64 = 0.9091;
/// Similarity bound used by [`summarize`] unless overridden.
pub const DEFAULT_SIM_THRESHOLD: f64 = 0.6;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid manifest: {}", violations.join("; "))]
    InvalidManifest { violations: Vec<String> },
    #[error("language `{language}` is not configured (needed for direction `{direction}`)")]
    UnknownLanguage { direction: String, language: String },
    #[error("manifest provides no sources for language `{language}`")]
    MissingManifestLanguage { language: String },
    #[error("no result rows found under {path}")]
    NoRows { path: PathBuf },
}

// ---------------------------------------------------------------------------
// Suite manifest
// ---------------------------------------------------------------------------

/// One benchmark application: a source file per language plus the runtime
/// arguments every execution of it receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    #[serde(rename = "app")]
    pub app_name: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub runtime_args: Vec<String>,
    pub sources: BTreeMap<String, PathBuf>,
}

/// A validated benchmark suite: the languages it covers and its entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub languages: Vec<String>,
    #[serde(rename = "entry")]
    pub entries: Vec<SuiteEntry>,
}

impl SuiteManifest {
    /// All violations at once, so a bad manifest is fixable in one pass.
    pub fn validate(&self) -> Result<(), BenchError> {
        let mut violations = Vec::new();
        if self.languages.is_empty() {
            violations.push("manifest declares no languages".to_string());
        }
        if self.entries.is_empty() {
            violations.push("manifest has no entries".to_string());
        }
        let mut seen = BTreeSet::new();
        for (i, entry) in self.entries.iter().enumerate() {
            let name = if entry.app_name.is_empty() {
                violations.push(format!("entry #{} has an empty app name", i + 1));
                format!("#{}", i + 1)
            } else {
                entry.app_name.clone()
            };
            if !entry.app_name.is_empty() && !seen.insert(entry.app_name.clone()) {
                violations.push(format!("duplicate app name `{name}`"));
            }
            for language in &self.languages {
                if !entry.sources.contains_key(language) {
                    violations.push(format!(
                        "entry `{name}` is missing a source path for language `{language}`"
                    ));
                }
            }
            for language in entry.sources.keys() {
                if !self.languages.contains(language) {
                    violations.push(format!(
                        "entry `{name}` names language `{language}` not in the manifest's language list"
                    ));
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(BenchError::InvalidManifest { violations })
        }
    }
}

/// Loads and validates a TOML suite manifest. Relative source paths are
/// resolved against the manifest file's directory.
pub fn load_suite(manifest_path: &Path) -> Result<SuiteManifest, BenchError> {
    let text = std::fs::read_to_string(manifest_path).map_err(|source| BenchError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let mut manifest: SuiteManifest = toml::from_str(&text).map_err(|e| BenchError::Parse {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    if let Some(base) = manifest_path.parent() {
        for entry in &mut manifest.entries {
            for path in entry.sources.values_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }
    manifest.validate()?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Result rows
// ---------------------------------------------------------------------------

/// What one matrix cell produced: metrics on success, a status otherwise.
/// Failure rows never carry partial metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOutcome {
    Metrics(MetricsRecord),
    Failed { status: String },
}

/// One cell of the benchmark matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub app_name: String,
    pub llm_name: String,
    pub direction: Direction,
    pub outcome: RowOutcome,
}

impl ResultRow {
    pub fn metrics(&self) -> Option<&MetricsRecord> {
        match &self.outcome {
            RowOutcome::Metrics(m) => Some(m),
            RowOutcome::Failed { .. } => None,
        }
    }

    /// `"Success"` for metric rows, the recorded status otherwise.
    pub fn status_label(&self) -> &str {
        match &self.outcome {
            RowOutcome::Metrics(_) => "Success",
            RowOutcome::Failed { status } => status,
        }
    }
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

/// Which similarity column [`summarize`] thresholds on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMetric {
    Token,
    Line,
}

impl std::str::FromStr for SimMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "token" | "sim-t" | "sim_t" => Ok(SimMetric::Token),
            "line" | "sim-l" | "sim_l" => Ok(SimMetric::Line),
            other => Err(format!(
                "unknown similarity metric `{other}` (expected token or line)"
            )),
        }
    }
}

impl std::fmt::Display for SimMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimMetric::Token => "token",
            SimMetric::Line => "line",
        })
    }
}

/// Aggregates over a set of result rows. `success_rate` is over all rows;
/// the other three percentages are over *successful* rows only, matching how
/// the counts are reported per direction in the reference tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n_total: usize,
    pub n_success: usize,
    pub n_within_runtime_threshold: usize,
    pub n_similar: usize,
    pub n_first_attempt: usize,
    pub success_rate: f64,
    pub pct_within_runtime_threshold: f64,
    pub pct_similar: f64,
    pub pct_first_attempt: f64,
    pub runtime_threshold: f64,
    pub sim_threshold: f64,
    pub sim_metric: SimMetric,
}

fn pct(n: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        n as f64 * 100.0 / denom as f64
    }
}

pub fn summarize(
    rows: &[ResultRow],
    runtime_threshold: f64,
    sim_threshold: f64,
    sim_metric: SimMetric,
) -> SummaryStats {
    let successes: Vec<&MetricsRecord> = rows.iter().filter_map(ResultRow::metrics).collect();
    let n_total = rows.len();
    let n_success = successes.len();
    let n_within_runtime_threshold = successes
        .iter()
        .filter(|m| m.ratio >= runtime_threshold)
        .count();
    let n_similar = successes
        .iter()
        .filter(|m| {
            let sim = match sim_metric {
                SimMetric::Token => m.sim_t,
                SimMetric::Line => m.sim_l,
            };
            sim >= sim_threshold
        })
        .count();
    let n_first_attempt = successes.iter().filter(|m| m.self_corr == 0).count();
    SummaryStats {
        n_total,
        n_success,
        n_within_runtime_threshold,
        n_similar,
        n_first_attempt,
        success_rate: pct(n_success, n_total),
        pct_within_runtime_threshold: pct(n_within_runtime_threshold, n_success),
        pct_similar: pct(n_similar, n_success),
        pct_first_attempt: pct(n_first_attempt, n_success),
        runtime_threshold,
        sim_threshold,
        sim_metric,
    }
}

/// Human-readable summary block, one per direction in CLI output.
pub fn render_summary(label: &str, stats: &SummaryStats) -> String {
    format!(
        "{label}: {success}/{total} successful ({rate:.1}%)\n  \
         ratio >= {rt}: {within}/{success} ({pw:.1}%)\n  \
         {metric} similarity >= {st}: {similar}/{success} ({ps:.1}%)\n  \
         first attempt (self_corr == 0): {first}/{success} ({pf:.1}%)\n",
        label = label,
        success = stats.n_success,
        total = stats.n_total,
        rate = stats.success_rate,
        rt = stats.runtime_threshold,
        within = stats.n_within_runtime_threshold,
        pw = stats.pct_within_runtime_threshold,
        metric = stats.sim_metric,
        st = stats.sim_threshold,
        similar = stats.n_similar,
        ps = stats.pct_similar,
        first = stats.n_first_attempt,
        pf = stats.pct_first_attempt,
    )
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!(
                "unknown report format `{other}` (expected csv, json, or markdown)"
            )),
        }
    }
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "markdown",
        })
    }
}

const NA: &str = "N/A";

/// The five metric columns as display strings, `"N/A"` across the board for
/// failures.
fn metric_cells(row: &ResultRow) -> [String; 5] {
    match row.metrics() {
        Some(m) => [
            render4(m.runtime_generated_s),
            render4(m.ratio),
            format!("{:.2}", m.sim_t),
            format!("{:.2}", m.sim_l),
            m.self_corr.to_string(),
        ],
        None => std::array::from_fn(|_| NA.to_string()),
    }
}

pub fn render_report(rows: &[ResultRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(rows),
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows).expect("rows serialize");
            text.push('\n');
            text
        }
        ReportFormat::Markdown => render_markdown(rows),
    }
}

fn render_csv(rows: &[ResultRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "app",
            "llm",
            "direction",
            "runtime_s",
            "ratio",
            "sim_t",
            "sim_l",
            "self_corr",
            "status",
        ])
        .expect("csv header");
    for row in rows {
        let cells = metric_cells(row);
        writer
            .write_record([
                row.app_name.as_str(),
                row.llm_name.as_str(),
                &row.direction.to_string(),
                &cells[0],
                &cells[1],
                &cells[2],
                &cells[3],
                &cells[4],
                row.status_label(),
            ])
            .expect("csv row");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv utf8")
}

fn render_markdown(rows: &[ResultRow]) -> String {
    let mut out = String::from("# Translation results\n");
    let mut current: Option<(String, String)> = None;
    for row in rows {
        let panel = (row.direction.to_string(), row.llm_name.clone());
        if current.as_ref() != Some(&panel) {
            out.push_str(&format!("\n## {} ({})\n\n", panel.1, panel.0));
            out.push_str("| App | Runtime (s) | Ratio | Sim-T | Sim-L | Self-corr |\n");
            out.push_str("| --- | --- | --- | --- | --- | --- |\n");
            current = Some(panel);
        }
        let cells = metric_cells(row);
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            row.app_name, cells[0], cells[1], cells[2], cells[3], cells[4]
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Scripted reply books
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
struct Replies {
    replies: Vec<String>,
}

/// Scripted backend replies for a benchmark matrix: a reply list per cell
/// (keyed `"<app>:<source>-><target>"`), with an optional `[default]` list
/// for cells without their own entry.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct ScriptBook {
    #[serde(default)]
    default: Option<Replies>,
    #[serde(default)]
    cell: BTreeMap<String, Replies>,
}

impl ScriptBook {
    pub fn new() -> Self {
        ScriptBook::default()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ScriptBook::from_toml_str(&text).map_err(|message| BenchError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn cell_key(app_name: &str, direction: &Direction) -> String {
        format!("{app_name}:{direction}")
    }

    pub fn set_default(&mut self, replies: Vec<String>) {
        self.default = Some(Replies { replies });
    }

    pub fn set_cell(&mut self, key: impl Into<String>, replies: Vec<String>) {
        self.cell.insert(key.into(), Replies { replies });
    }

    /// The reply list for a cell: its own entry if present, else the default.
    pub fn for_cell(&self, app_name: &str, direction: &Direction) -> Option<&[String]> {
        self.cell
            .get(&ScriptBook::cell_key(app_name, direction))
            .or(self.default.as_ref())
            .map(|r| r.replies.as_slice())
    }
}

// ---------------------------------------------------------------------------
// Matrix runner
// ---------------------------------------------------------------------------

/// Where a cell's chat backend comes from: one shared live backend, or a
/// fresh [`ScriptedBackend`] per cell built from a [`ScriptBook`]. Scripted
/// cells also get a fresh summary cache each, keeping every cell's call
/// sequence independent of scheduling.
#[derive(Clone)]
pub enum BackendSource {
    Shared(Arc<dyn ChatBackend>),
    Scripted(ScriptBook),
}

/// One LLM column of the matrix.
#[derive(Clone)]
pub struct BenchLlm {
    pub profile: LlmProfile,
    pub source: BackendSource,
}

/// Everything the matrix shares across cells.
pub struct MatrixConfig {
    pub languages: BTreeMap<String, LanguageSpec>,
    pub dict: PromptDictionary,
    pub loop_cfg: LoopConfig,
    pub out_dir: PathBuf,
    pub workers: usize,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CellFingerprint<'a> {
    app: &'a str,
    direction: String,
    profile: &'a LlmProfile,
    loop_cfg: &'a LoopConfig,
    runtime_args: &'a [String],
    source_paths: Vec<String>,
}

/// Resume key: the cell is re-run whenever anything that could change its
/// outcome changes. Backend scripts are deliberately excluded — a completed
/// measurement stays valid when reply files move around.
fn cell_fingerprint(
    entry: &SuiteEntry,
    profile: &LlmProfile,
    direction: &Direction,
    loop_cfg: &LoopConfig,
) -> u64 {
    let fp = CellFingerprint {
        app: &entry.app_name,
        direction: direction.to_string(),
        profile,
        loop_cfg,
        runtime_args: &entry.runtime_args,
        source_paths: [&direction.source, &direction.target]
            .iter()
            .map(|lang| {
                entry
                    .sources
                    .get(*lang)
                    .map(|p| p.display().to_string())
                    .unwrap_or_default()
            })
            .collect(),
    };
    crate::fnv1a64(&serde_json::to_vec(&fp).expect("fingerprint serialize"))
}

fn cell_stem(entry: &SuiteEntry, llm_name: &str, direction: &Direction) -> String {
    format!(
        "{}__{}__{}-to-{}",
        sanitize(&entry.app_name),
        sanitize(llm_name),
        sanitize(&direction.source),
        sanitize(&direction.target)
    )
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let io_err = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = serde_json::to_string_pretty(value).expect("row serialize");
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// A previously persisted row, if present and readable. Unreadable files are
/// treated as absent so a torn write re-runs the cell instead of wedging the
/// matrix.
fn read_resumed_row(path: &Path) -> Option<ResultRow> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn failed_row(
    entry: &SuiteEntry,
    llm_name: &str,
    direction: &Direction,
    status: String,
) -> ResultRow {
    ResultRow {
        app_name: entry.app_name.clone(),
        llm_name: llm_name.to_string(),
        direction: direction.clone(),
        outcome: RowOutcome::Failed { status },
    }
}

/// Converts a finished session into its row. Success rows get metrics
/// computed against the reference target code; anything else carries the
/// terminal status.
fn row_from_record(
    record: &SessionRecord,
    reference: &str,
    entry: &SuiteEntry,
    llm_name: &str,
    direction: &Direction,
) -> ResultRow {
    if record.status != SessionStatus::Success {
        return failed_row(entry, llm_name, direction, record.status.to_string());
    }
    let metrics = (|| {
        let code = record.final_code.as_deref()?;
        let generated = record.generated_runtime_s?;
        let baseline = record.baseline.as_ref()?;
        let source = baseline.target_runtime_s?;
        let verdict = match (&baseline.target_stdout, &record.final_stdout) {
            (Some(expected), Some(actual)) => {
                if compare_output(expected, actual, CompareMode::Filtered) {
                    OutputVerdict::Match
                } else {
                    OutputVerdict::Mismatch
                }
            }
            _ => OutputVerdict::Unchecked,
        };
        Some(MetricsRecord::new(
            generated,
            source,
            sim_t(reference, code),
            sim_l(reference, code),
            record.self_corr,
            verdict,
        ))
    })();
    match metrics {
        Some(m) => ResultRow {
            app_name: entry.app_name.clone(),
            llm_name: llm_name.to_string(),
            direction: direction.clone(),
            outcome: RowOutcome::Metrics(m),
        },
        None => failed_row(
            entry,
            llm_name,
            direction,
            "Success (metrics unavailable)".to_string(),
        ),
    }
}

fn execute_cell(
    entry: &SuiteEntry,
    llm: &BenchLlm,
    direction: &Direction,
    cfg: &MatrixConfig,
    sessions_dir: &Path,
    shared_cache: &SummaryCache,
) -> Result<ResultRow, BenchError> {
    let llm_name = &llm.profile.name;
    let fail = |status: String| failed_row(entry, llm_name, direction, status);

    let read_source = |language: &str| -> Result<String, String> {
        let path = &entry.sources[language];
        std::fs::read_to_string(path)
            .map_err(|e| format!("error: failed to read {}: {e}", path.display()))
    };
    let source_code = match read_source(&direction.source) {
        Ok(text) => text,
        Err(status) => return Ok(fail(status)),
    };
    let reference = match read_source(&direction.target) {
        Ok(text) => text,
        Err(status) => return Ok(fail(status)),
    };

    let fresh_cache = SummaryCache::new();
    let (backend, cache): (Arc<dyn ChatBackend>, &SummaryCache) = match &llm.source {
        BackendSource::Shared(backend) => (backend.clone(), shared_cache),
        BackendSource::Scripted(book) => match book.for_cell(&entry.app_name, direction) {
            Some(replies) => (
                Arc::new(ScriptedBackend::new(replies.iter().cloned())),
                &fresh_cache,
            ),
            None => return Ok(fail("error: no scripted replies for this cell".to_string())),
        },
    };

    let workdir = sessions_dir.join(cell_stem(entry, llm_name, direction));
    let task = TranslationTask {
        app_name: entry.app_name.clone(),
        direction: direction.clone(),
        source_code,
        reference_target_code: Some(reference.clone()),
        runtime_args: entry.runtime_args.clone(),
    };
    let env = PipelineEnv {
        backend: backend.as_ref(),
        profile: &llm.profile,
        estimator: &ByteEstimator,
        dict: &cfg.dict,
        source_spec: &cfg.languages[&direction.source],
        target_spec: &cfg.languages[&direction.target],
        cache,
        workdir: &workdir,
        cfg: &cfg.loop_cfg,
    };
    let record = match run_pipeline(&task, &env) {
        Ok(record) => record,
        Err(e) => return Ok(fail(format!("error: {e}"))),
    };
    save_session(&record, &workdir).map_err(|e| match e {
        crate::pipeline::PipelineError::Io(source) => BenchError::Io {
            path: workdir.clone(),
            source,
        },
        other => BenchError::Parse {
            path: workdir.clone(),
            message: other.to_string(),
        },
    })?;
    Ok(row_from_record(
        &record, &reference, entry, llm_name, direction,
    ))
}

struct Cell<'a> {
    entry: &'a SuiteEntry,
    llm: &'a BenchLlm,
    direction: &'a Direction,
}

fn run_cell(
    cell: &Cell<'_>,
    cfg: &MatrixConfig,
    rows_dir: &Path,
    sessions_dir: &Path,
    shared_cache: &SummaryCache,
) -> Result<ResultRow, BenchError> {
    let fingerprint =
        cell_fingerprint(cell.entry, &cell.llm.profile, cell.direction, &cfg.loop_cfg);
    let row_path = rows_dir.join(format!(
        "{}__{fingerprint:016x}.json",
        cell_stem(cell.entry, &cell.llm.profile.name, cell.direction)
    ));
    if let Some(row) = read_resumed_row(&row_path) {
        return Ok(row);
    }
    let row = execute_cell(
        cell.entry,
        cell.llm,
        cell.direction,
        cfg,
        sessions_dir,
        shared_cache,
    )?;
    write_json_atomic(&row_path, &row)?;
    Ok(row)
}

/// Runs every (direction, llm, entry) cell, resuming over previously
/// completed rows. Cell order in the returned list is deterministic:
/// directions, then LLMs, then manifest entries, in the given order.
pub fn run_matrix(
    manifest: &SuiteManifest,
    llms: &[BenchLlm],
    directions: &[Direction],
    cfg: &MatrixConfig,
) -> Result<Vec<ResultRow>, BenchError> {
    for direction in directions {
        for language in [&direction.source, &direction.target] {
            if !cfg.languages.contains_key(language) {
                return Err(BenchError::UnknownLanguage {
                    direction: direction.to_string(),
                    language: language.clone(),
                });
            }
            if !manifest.languages.contains(language) {
                return Err(BenchError::MissingManifestLanguage {
                    language: language.clone(),
                });
            }
        }
    }

    let rows_dir = cfg.out_dir.join("rows");
    let sessions_dir = cfg.out_dir.join("sessions");
    for dir in [&rows_dir, &sessions_dir] {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
            path: dir.clone(),
            source,
        })?;
    }

    let shared_cache = SummaryCache::new();
    let mut cells = Vec::new();
    for direction in directions {
        for llm in llms {
            for entry in &manifest.entries {
                cells.push(Cell {
                    entry,
                    llm,
                    direction,
                });
            }
        }
    }

    let slots: Mutex<Vec<Option<Result<ResultRow, BenchError>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = cfg.workers.clamp(1, cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let outcome = run_cell(&cells[i], cfg, &rows_dir, &sessions_dir, &shared_cache);
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("all cells executed"))
        .collect()
}

/// Reads every persisted row under a `rows/` directory. Strict, unlike
/// resume: a corrupt row file is an error here, because the caller asked to
/// render exactly what was recorded. Rows come back sorted by
/// (direction, llm, app) for stable reports.
pub fn load_rows(rows_dir: &Path) -> Result<Vec<ResultRow>, BenchError> {
    let io_err = |source| BenchError::Io {
        path: rows_dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(rows_dir)
        .map_err(io_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|source| BenchError::Io {
            path: path.clone(),
            source,
        })?;
        let row: ResultRow = serde_json::from_str(&text).map_err(|e| BenchError::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(BenchError::NoRows {
            path: rows_dir.to_path_buf(),
        });
    }
    rows.sort_by(|a, b| {
        (a.direction.to_string(), &a.llm_name, &a.app_name).cmp(&(
            b.direction.to_string(),
            &b.llm_name,
            &b.app_name,
        ))
    });
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Bundled reference fixtures
// ---------------------------------------------------------------------------

/// Reference result tables: measured source runtimes for ten benchmark apps
/// and the per-LLM translation outcomes in both directions. These regression-
/// test ratio math, N/A handling, report rendering, and summary statistics
/// without needing GPUs or live models.
pub mod fixtures {
    use super::*;

    pub const SOURCE_RUNTIMES_JSON: &str = include_str!("../assets/fixtures/source_runtimes.json");
    pub const OPENMP_TO_CUDA_JSON: &str = include_str!("../assets/fixtures/openmp_to_cuda.json");
    pub const CUDA_TO_OPENMP_JSON: &str = include_str!("../assets/fixtures/cuda_to_openmp.json");

    /// Measured runtime of one app's reference implementation per language.
    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct SourceRuntime {
        pub app: String,
        pub category: String,
        pub runtime_args: Vec<String>,
        pub runtime_s: BTreeMap<String, f64>,
    }

    /// One row of a published result table. Success rows carry the five
    /// metric columns; failures carry `status` (`"N/A"` in the tables). The
    /// single known defective row is flagged `erratum` and excluded from
    /// ratio-consistency checks.
    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct FixtureRow {
        pub app: String,
        pub llm: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub runtime_s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub ratio: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub sim_t: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub sim_l: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub self_corr: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub status: Option<String>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        pub erratum: bool,
    }

    impl FixtureRow {
        pub fn is_success(&self) -> bool {
            self.status.is_none()
        }
    }

    pub fn source_runtimes() -> Vec<SourceRuntime> {
        serde_json::from_str(SOURCE_RUNTIMES_JSON).expect("bundled source runtimes parse")
    }

    /// The reference runtime for one app in one language.
    pub fn source_runtime(app: &str, language: &str) -> Option<f64> {
        source_runtimes()
            .into_iter()
            .find(|r| r.app == app)
            .and_then(|r| r.runtime_s.get(language).copied())
    }

    pub fn openmp_to_cuda() -> Vec<FixtureRow> {
        serde_json::from_str(OPENMP_TO_CUDA_JSON).expect("bundled openmp->cuda table parse")
    }

    pub fn cuda_to_openmp() -> Vec<FixtureRow> {
        serde_json::from_str(CUDA_TO_OPENMP_JSON).expect("bundled cuda->openmp table parse")
    }

    /// Converts fixture rows into [`ResultRow`]s for the report and summary
    /// paths. Ratios are taken as printed in the table, not recomputed; the
    /// source runtime is the reference implementation in the *target*
    /// language, which is what the ratio compares against.
    pub fn result_rows(direction: &Direction, rows: &[FixtureRow]) -> Vec<ResultRow> {
        rows.iter()
            .map(|row| {
                let outcome = if row.is_success() {
                    RowOutcome::Metrics(MetricsRecord {
                        runtime_generated_s: row.runtime_s.expect("success row runtime"),
                        runtime_source_s: source_runtime(&row.app, &direction.target)
                            .expect("known app"),
                        ratio: row.ratio.expect("success row ratio"),
                        sim_t: row.sim_t.expect("success row sim_t"),
                        sim_l: row.sim_l.expect("success row sim_l"),
                        self_corr: row.self_corr.expect("success row self_corr"),
                        output_verdict: OutputVerdict::Match,
                    })
                } else {
                    RowOutcome::Failed {
                        status: row.status.clone().unwrap_or_else(|| "N/A".to_string()),
                    }
                };
                ResultRow {
                    app_name: row.app.clone(),
                    llm_name: row.llm.clone(),
                    direction: direction.clone(),
                    outcome,
                }
            })
            .collect()
    }

    /// Both directions' tables as result rows, OpenMP→CUDA first.
    pub fn all_result_rows() -> Vec<ResultRow> {
        let mut rows = result_rows(&Direction::new("openmp", "cuda"), &openmp_to_cuda());
        rows.extend(result_rows(
            &Direction::new("cuda", "openmp"),
            &cuda_to_openmp(),
        ));
        rows
    }
}
