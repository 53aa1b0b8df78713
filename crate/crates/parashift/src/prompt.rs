//! Prompt dictionary, four-part prompt assembly, self-prompting helpers, and
//! correction-prompt rendering.

use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, ChatRequest, Client, TokenEstimator};
use crate::domain::{Direction, KnowledgeAsset, ToolResult};
use crate::fnv1a64;

/// The dictionary shipped with the crate.
pub const DEFAULT_PROMPTS_TOML: &str = include_str!("../assets/prompts.toml");

pub const TRUNCATION_MARKER: &str = "[...truncated]";

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("no prompts configured for direction `{0}`")]
    UnknownDirection(Direction),
    #[error("source code must be nonempty")]
    EmptySource,
    #[error("prompt part `{0}` must be nonempty")]
    EmptyPart(&'static str),
    #[error("prompt template `{key}` is missing placeholder {placeholder}")]
    BadTemplate { key: String, placeholder: String },
    #[error("failed to read prompt dictionary: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse prompt dictionary: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Prompts for one translation direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionPrompts {
    pub source: String,
    pub target: String,
    pub system: String,
    pub translate: String,
}

fn default_knowledge_summary() -> String {
    "Generate a concise summary of the following {language} programming reference so the key \
     APIs, directives, and patterns can guide code generation:\n{knowledge}"
        .to_string()
}

fn default_source_description() -> String {
    "Describe what the following {language} source code computes and how it is parallelized, in \
     one short paragraph:\n{code}"
        .to_string()
}

/// All prompt text used by the pipeline, loaded from one structured file.
/// New directions are plain data; no code change needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptDictionary {
    pub general_system_prompt: String,
    /// Template over `{code}`, `{compiler_cmd}`, `{stderr}`.
    pub compile_error: String,
    /// Template over `{code}`, `{compiler_cmd}`, `{stderr}`.
    pub exec_error: String,
    /// Template over `{language}`, `{knowledge}`.
    #[serde(default = "default_knowledge_summary")]
    pub knowledge_summary: String,
    /// Template over `{language}`, `{code}`.
    #[serde(default = "default_source_description")]
    pub source_description: String,
    #[serde(rename = "direction")]
    pub directions: Vec<DirectionPrompts>,
}

impl Default for PromptDictionary {
    fn default() -> Self {
        PromptDictionary::from_toml_str(DEFAULT_PROMPTS_TOML)
            .expect("embedded prompt dictionary is valid")
    }
}

impl PromptDictionary {
    pub fn from_toml_str(text: &str) -> Result<Self, PromptError> {
        let dict: PromptDictionary = toml::from_str(text)?;
        dict.validate()?;
        Ok(dict)
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        PromptDictionary::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Placeholder presence is checked at load time so a bad template fails
    /// the run before any session starts.
    fn validate(&self) -> Result<(), PromptError> {
        let required: [(&str, &str, &[&str]); 4] = [
            (
                "compile_error",
                &self.compile_error,
                &["{code}", "{compiler_cmd}", "{stderr}"],
            ),
            (
                "exec_error",
                &self.exec_error,
                &["{code}", "{compiler_cmd}", "{stderr}"],
            ),
            (
                "knowledge_summary",
                &self.knowledge_summary,
                &["{language}", "{knowledge}"],
            ),
            (
                "source_description",
                &self.source_description,
                &["{language}", "{code}"],
            ),
        ];
        for (key, template, placeholders) in required {
            for placeholder in placeholders {
                if !template.contains(placeholder) {
                    return Err(PromptError::BadTemplate {
                        key: key.to_string(),
                        placeholder: placeholder.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    fn direction_prompts(&self, direction: &Direction) -> Result<&DirectionPrompts, PromptError> {
        self.directions
            .iter()
            .find(|d| d.source == direction.source && d.target == direction.target)
            .ok_or_else(|| PromptError::UnknownDirection(direction.clone()))
    }

    pub fn has_direction(&self, direction: &Direction) -> bool {
        self.direction_prompts(direction).is_ok()
    }

    /// Direction-specific system prompt used for translation and correction
    /// calls.
    pub fn system_prompt(&self, direction: &Direction) -> Result<&str, PromptError> {
        Ok(&self.direction_prompts(direction)?.system)
    }

    /// Direction-specific translation instruction.
    pub fn translation_prompt(&self, direction: &Direction) -> Result<&str, PromptError> {
        Ok(&self.direction_prompts(direction)?.translate)
    }

    /// Renders the compile-correction prompt: the offending code, then the
    /// error framing sentence. Stderr is tail-truncated to `stderr_budget`
    /// estimated tokens.
    pub fn compile_error_prompt(
        &self,
        code: &str,
        compiler_cmd: &str,
        stderr: &str,
        stderr_budget: usize,
        estimator: &dyn TokenEstimator,
    ) -> String {
        let stderr = truncate_stderr(stderr, stderr_budget, estimator);
        self.compile_error
            .replace("{code}", code)
            .replace("{compiler_cmd}", compiler_cmd)
            .replace("{stderr}", &stderr)
    }

    /// Renders the execution-correction prompt; same truncation rule.
    pub fn exec_error_prompt(
        &self,
        code: &str,
        compiler_cmd: &str,
        stderr: &str,
        stderr_budget: usize,
        estimator: &dyn TokenEstimator,
    ) -> String {
        let stderr = truncate_stderr(stderr, stderr_budget, estimator);
        self.exec_error
            .replace("{code}", code)
            .replace("{compiler_cmd}", compiler_cmd)
            .replace("{stderr}", &stderr)
    }
}

/// The stderr text fed into an execution-correction prompt. Timeouts and
/// silent nonzero exits get explicit wording so the model has something to
/// react to.
pub fn execution_error_text(result: &ToolResult, timeout_s: f64) -> String {
    if result.timed_out {
        format!("execution timed out after {timeout_s}s")
    } else if result.stderr.trim().is_empty() {
        "process exited with nonzero status and empty stderr".to_string()
    } else {
        result.stderr.clone()
    }
}

/// Head-truncates `stderr` so its estimate fits `budget` tokens, keeping the
/// tail (compilers put the first, most actionable error near the top of each
/// chunk but the tail carries the summary and notes; the cut is marked).
/// Returns the input unchanged when it already fits. When even the marker
/// alone exceeds the budget, the marker is returned as a floor.
pub fn truncate_stderr(stderr: &str, budget: usize, estimator: &dyn TokenEstimator) -> String {
    if estimator.estimate(stderr) <= budget {
        return stderr.to_string();
    }
    // Binary search the longest suffix that fits together with the marker;
    // estimates are monotone in length.
    let bytes = stderr.len();
    let (mut lo, mut hi) = (0usize, bytes); // suffix length in bytes
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        let start = snap_to_char_boundary(stderr, bytes - mid);
        let candidate = format!("{TRUNCATION_MARKER}{}", &stderr[start..]);
        if estimator.estimate(&candidate) <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let start = snap_to_char_boundary(stderr, bytes - lo);
    format!("{TRUNCATION_MARKER}{}", &stderr[start..])
}

fn snap_to_char_boundary(s: &str, mut idx: usize) -> usize {
    while idx < s.len() && !s.is_char_boundary(idx) {
        idx += 1;
    }
    idx
}

/// A fully assembled translation prompt plus its token estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_prompt: String,
    pub token_estimate: usize,
}

/// Builds the four-part translation prompt: knowledge text, knowledge
/// summary, then the instruction sentence wrapping the source description,
/// the direction's translation prompt, and the source code.
#[allow(clippy::too_many_arguments)]
pub fn assemble_translation_prompt(
    dict: &PromptDictionary,
    direction: &Direction,
    knowledge_text: &str,
    knowledge_summary: &str,
    description: &str,
    source_code: &str,
    profile: &crate::domain::LlmProfile,
    estimator: &dyn TokenEstimator,
) -> Result<PromptBundle, PromptError> {
    for (name, part) in [
        ("knowledge_text", knowledge_text),
        ("knowledge_summary", knowledge_summary),
        ("description", description),
        ("source_code", source_code),
    ] {
        if part.trim().is_empty() {
            return Err(PromptError::EmptyPart(name));
        }
    }
    let translate = dict.translation_prompt(direction)?;
    let system_prompt = dict.system_prompt(direction)?.to_string();
    let user_prompt = format!(
        "{knowledge_text}\n\n{knowledge_summary}\n\nThink carefully before developing the \
         following code that you describe as: {description}. Now, {translate}: {source_code}"
    );
    let token_estimate = estimator.estimate(&system_prompt) + estimator.estimate(&user_prompt);
    if token_estimate + profile.max_response_tokens > profile.context_length {
        return Err(PromptError::Backend(BackendError::ContextOverflow {
            estimated: token_estimate,
            max_tokens: profile.max_response_tokens,
            context_length: profile.context_length,
        }));
    }
    Ok(PromptBundle {
        system_prompt,
        user_prompt,
        token_estimate,
    })
}

/// One prompt/response pair that actually went to a backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub prompt: String,
    pub response: String,
}

/// Result of [`summarize_knowledge`]: the summary text, and the exchange that
/// produced it (absent on a cache hit).
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub text: String,
    pub exchange: Option<Exchange>,
}

/// Knowledge summaries keyed by `(model_id, asset text hash)` so one model
/// summarizes a given asset at most once per cache lifetime.
#[derive(Default)]
pub struct SummaryCache {
    entries: RwLock<HashMap<(String, u64), String>>,
}

impl SummaryCache {
    pub fn new() -> Self {
        SummaryCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(String, u64)) -> Option<String> {
        self.entries.read().unwrap().get(key).cloned()
    }

    fn insert(&self, key: (String, u64), value: String) {
        self.entries.write().unwrap().insert(key, value);
    }
}

/// Asks the model to summarize a knowledge asset, consulting `cache` first.
pub fn summarize_knowledge(
    client: &Client<'_>,
    dict: &PromptDictionary,
    asset: &KnowledgeAsset,
    cache: &SummaryCache,
) -> Result<Summary, PromptError> {
    let key = (
        client.profile.model_id.clone(),
        fnv1a64(asset.text.as_bytes()),
    );
    if let Some(text) = cache.get(&key) {
        return Ok(Summary {
            text,
            exchange: None,
        });
    }
    let prompt = dict
        .knowledge_summary
        .replace("{language}", &asset.language)
        .replace("{knowledge}", &asset.text);
    let request = ChatRequest::new(
        Some(dict.general_system_prompt.clone()),
        &prompt,
        client.profile,
    );
    let response = client.complete(&request)?;
    cache.insert(key, response.text.clone());
    Ok(Summary {
        text: response.text.clone(),
        exchange: Some(Exchange {
            prompt,
            response: response.text,
        }),
    })
}

/// Asks the model to describe the source program in its original language.
pub fn describe_source(
    client: &Client<'_>,
    dict: &PromptDictionary,
    language: &str,
    source_code: &str,
) -> Result<Exchange, PromptError> {
    if source_code.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    let prompt = dict
        .source_description
        .replace("{language}", language)
        .replace("{code}", source_code);
    let request = ChatRequest::new(
        Some(dict.general_system_prompt.clone()),
        &prompt,
        client.profile,
    );
    let response = client.complete(&request)?;
    Ok(Exchange {
        prompt,
        response: response.text,
    })
}
