//! Core data model: language specs, tasks, tool results, session records.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How to compile and run code for one programming language / framework.
///
/// `compile_cmd` is an argv template containing `{src}` and `{out}` exactly
/// once each; `run_cmd` contains `{bin}` exactly once and may contain
/// `{args}`. Commands are executed directly (no shell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub name: String,
    pub file_extension: String,
    pub compile_cmd: String,
    pub run_cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge_asset: Option<PathBuf>,
    /// Extra environment variables set for compile and run child processes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env: BTreeMap<String, String>,
}

impl LanguageSpec {
    pub fn new(
        name: impl Into<String>,
        file_extension: impl Into<String>,
        compile_cmd: impl Into<String>,
        run_cmd: impl Into<String>,
    ) -> Self {
        LanguageSpec {
            name: name.into(),
            file_extension: file_extension.into(),
            compile_cmd: compile_cmd.into(),
            run_cmd: run_cmd.into(),
            knowledge_asset: None,
            env: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid language spec `{name}`: {}", violations.join("; "))]
pub struct SpecError {
    pub name: String,
    pub violations: Vec<String>,
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

/// Checks the placeholder invariants of a [`LanguageSpec`], reporting every
/// violation rather than the first.
pub fn validate_language_spec(spec: &LanguageSpec) -> Result<(), SpecError> {
    let mut violations = Vec::new();
    if spec.name.trim().is_empty() {
        violations.push("name must be nonempty".to_string());
    }
    for (field, template, placeholder) in [
        ("compile_cmd", &spec.compile_cmd, "{src}"),
        ("compile_cmd", &spec.compile_cmd, "{out}"),
        ("run_cmd", &spec.run_cmd, "{bin}"),
    ] {
        match count_occurrences(template, placeholder) {
            1 => {}
            0 => violations.push(format!("{field} is missing {placeholder}")),
            n => violations.push(format!(
                "{field} contains {placeholder} {n} times, expected exactly once"
            )),
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SpecError {
            name: spec.name.clone(),
            violations,
        })
    }
}

/// Translation direction between two configured languages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Direction {
    pub source: String,
    pub target: String,
}

impl Direction {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Direction {
            source: source.into(),
            target: target.into(),
        }
    }

    pub fn reversed(&self) -> Direction {
        Direction {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (source, target) = s
            .split_once("->")
            .ok_or_else(|| format!("direction must look like `cuda->openmp`, got `{s}`"))?;
        let (source, target) = (source.trim(), target.trim());
        if source.is_empty() || target.is_empty() {
            return Err(format!("direction must name both languages, got `{s}`"));
        }
        Ok(Direction::new(source, target))
    }
}

impl TryFrom<String> for Direction {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Direction> for String {
    fn from(d: Direction) -> String {
        d.to_string()
    }
}

/// A reference to external text (language manual, API card) fed to the model
/// as grounding before translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeAsset {
    pub language: String,
    pub path: PathBuf,
    pub text: String,
    pub token_estimate: usize,
}

/// One LLM endpoint with its context budget and sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmProfile {
    pub name: String,
    pub model_id: String,
    pub context_length: usize,
    pub max_response_tokens: usize,
    pub temperature: f64,
}

/// One unit of work: translate `source_code` from `direction.source` to
/// `direction.target`. `reference_target_code` is present in benchmark mode
/// and absent in plain translate mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTask {
    pub app_name: String,
    pub direction: Direction,
    pub source_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_target_code: Option<String>,
    #[serde(default)]
    pub runtime_args: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    Compile,
    Execute,
}

/// Outcome of one compiler or program invocation. Nonzero exit and timeouts
/// are data here, never errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub kind: ToolKind,
    pub exit_ok: bool,
    pub stdout: String,
    pub stderr: String,
    pub wall_time_s: f64,
    pub timed_out: bool,
}

impl ToolResult {
    /// `timed_out` forces `exit_ok == false`; constructing through here keeps
    /// that invariant out of callers' hands.
    pub fn new(
        kind: ToolKind,
        exit_ok: bool,
        stdout: impl Into<String>,
        stderr: impl Into<String>,
        wall_time_s: f64,
        timed_out: bool,
    ) -> Self {
        ToolResult {
            kind,
            exit_ok: exit_ok && !timed_out,
            stdout: stdout.into(),
            stderr: stderr.into(),
            wall_time_s,
            timed_out,
        }
    }
}

/// Terminal state of a pipeline session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionStatus {
    Success,
    CompileBudgetExceeded,
    ExecBudgetExceeded,
    ExtractionFailed,
    BaselineFailed,
    ContextOverflow,
}

impl SessionStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SessionStatus::Success)
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SessionStatus::Success => "Success",
            SessionStatus::CompileBudgetExceeded => "CompileBudgetExceeded",
            SessionStatus::ExecBudgetExceeded => "ExecBudgetExceeded",
            SessionStatus::ExtractionFailed => "ExtractionFailed",
            SessionStatus::BaselineFailed => "BaselineFailed",
            SessionStatus::ContextOverflow => "ContextOverflow",
        };
        f.write_str(s)
    }
}

/// Why a prompt was sent. Correction kinds are what `self_corr` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    KnowledgeSummary,
    SourceDescription,
    Translation,
    CompileCorrection,
    ExecCorrection,
}

impl PromptKind {
    pub fn is_correction(self) -> bool {
        matches!(
            self,
            PromptKind::CompileCorrection | PromptKind::ExecCorrection
        )
    }
}

/// One prompt/response exchange, timestamped in ISO-8601.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub kind: PromptKind,
    pub prompt: String,
    pub response: String,
    pub timestamp: chrono::DateTime<chrono::Utc>,
}

/// One extracted code version together with the tool invocations it went
/// through (compile first, then execute if the compile succeeded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub version: u32,
    pub code: String,
    pub results: Vec<ToolResult>,
}

/// Baseline measurements taken before any LLM call: the source must build and
/// run; in benchmark mode the reference target is built, run, and timed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BaselineRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_compile: Option<ToolResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_execute: Option<ToolResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_compile: Option<ToolResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_execute: Option<ToolResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_stdout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_runtime_s: Option<f64>,
}

/// Full audit record of one pipeline session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub task: TranslationTask,
    pub llm: String,
    pub transcript: Vec<TranscriptEntry>,
    pub attempts: Vec<AttemptRecord>,
    pub status: SessionStatus,
    pub self_corr: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_stdout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_runtime_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineRecord>,
}

impl SessionRecord {
    /// Correction prompts present in the transcript; equals `self_corr` by
    /// construction in the pipeline.
    pub fn correction_prompt_count(&self) -> usize {
        self.transcript
            .iter()
            .filter(|e| e.kind.is_correction())
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputVerdict {
    Match,
    Mismatch,
    Unchecked,
}

/// Evaluation metrics for one successful session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub runtime_generated_s: f64,
    pub runtime_source_s: f64,
    pub ratio: f64,
    pub sim_t: f64,
    pub sim_l: f64,
    pub self_corr: u32,
    pub output_verdict: OutputVerdict,
}

impl MetricsRecord {
    /// `ratio` is derived from the two runtimes; keeping the computation here
    /// preserves `ratio == runtime_source_s / runtime_generated_s`.
    pub fn new(
        runtime_generated_s: f64,
        runtime_source_s: f64,
        sim_t: f64,
        sim_l: f64,
        self_corr: u32,
        output_verdict: OutputVerdict,
    ) -> Self {
        MetricsRecord {
            runtime_generated_s,
            runtime_source_s,
            ratio: runtime_source_s / runtime_generated_s,
            sim_t,
            sim_l,
            self_corr,
            output_verdict,
        }
    }
}
