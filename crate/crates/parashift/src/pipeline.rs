//! The self-correcting translation loop: baseline, context preparation,
//! generation, compile/execute correction cycles, finalization.

use std::path::{Path, PathBuf};

use crate::backend::{BackendError, ChatBackend, ChatRequest, Client, TokenEstimator};
use crate::domain::{
    AttemptRecord, KnowledgeAsset, LanguageSpec, LlmProfile, PromptKind, SessionRecord,
    SessionStatus, ToolResult, TranscriptEntry, TranslationTask,
};
use crate::prompt::{
    assemble_translation_prompt, describe_source, execution_error_text, summarize_knowledge,
    PromptDictionary, PromptError, SummaryCache,
};
use crate::toolchain::{
    compile_with_timeout, execute, measure_runtime, validate_baseline, BaselineOutcome, RunLimits,
    ToolchainError, DEFAULT_RESOURCE_LOCK,
};

/// Knobs of the correction loop. `max_self_corr` caps compile and execution
/// corrections jointly.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LoopConfig {
    pub max_self_corr: u32,
    pub compile_timeout_s: f64,
    pub exec_timeout_s: f64,
    pub n_runtime_runs: usize,
    pub resource_lock: Option<String>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_self_corr: 50,
            compile_timeout_s: crate::toolchain::DEFAULT_COMPILE_TIMEOUT_S,
            exec_timeout_s: crate::toolchain::DEFAULT_EXEC_TIMEOUT_S,
            n_runtime_runs: crate::toolchain::DEFAULT_RUNTIME_RUNS,
            resource_lock: Some(DEFAULT_RESOURCE_LOCK.to_string()),
        }
    }
}

impl LoopConfig {
    fn limits(&self) -> RunLimits {
        RunLimits {
            compile_timeout_s: self.compile_timeout_s,
            exec_timeout_s: self.exec_timeout_s,
            n_runtime_runs: self.n_runtime_runs,
        }
    }
}

/// Everything a session needs besides the task itself.
pub struct PipelineEnv<'a> {
    pub backend: &'a dyn ChatBackend,
    pub profile: &'a LlmProfile,
    pub estimator: &'a dyn TokenEstimator,
    pub dict: &'a PromptDictionary,
    pub source_spec: &'a LanguageSpec,
    pub target_spec: &'a LanguageSpec,
    pub cache: &'a SummaryCache,
    pub workdir: &'a Path,
    pub cfg: &'a LoopConfig,
}

/// Only configuration and infrastructure trouble raises; every model-side
/// outcome lands in the returned [`SessionRecord`] as a status.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("language `{language}` has no knowledge asset configured, required for translation")]
    MissingKnowledgeAsset { language: String },
    #[error("failed to read knowledge asset {path}: {source}")]
    AssetIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error(transparent)]
    Prompt(PromptError),
    #[error(transparent)]
    Backend(BackendError),
    #[error("failed to write session artifact: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads the knowledge asset configured on a language spec.
pub fn load_knowledge_asset(
    spec: &LanguageSpec,
    estimator: &dyn TokenEstimator,
) -> Result<KnowledgeAsset, PipelineError> {
    let path =
        spec.knowledge_asset
            .clone()
            .ok_or_else(|| PipelineError::MissingKnowledgeAsset {
                language: spec.name.clone(),
            })?;
    let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::AssetIo {
        path: path.clone(),
        source,
    })?;
    let token_estimate = estimator.estimate(&text);
    Ok(KnowledgeAsset {
        language: spec.name.clone(),
        path,
        text,
        token_estimate,
    })
}

struct Session {
    transcript: Vec<TranscriptEntry>,
    attempts: Vec<AttemptRecord>,
    self_corr: u32,
}

impl Session {
    fn record_exchange(&mut self, kind: PromptKind, prompt: &str, response: &str) {
        self.transcript.push(TranscriptEntry {
            kind,
            prompt: prompt.to_string(),
            response: response.to_string(),
            timestamp: chrono::Utc::now(),
        });
    }

    fn finish(
        self,
        task: &TranslationTask,
        llm: &str,
        status: SessionStatus,
        final_code: Option<String>,
        final_stdout: Option<String>,
        generated_runtime_s: Option<f64>,
        baseline: Option<crate::domain::BaselineRecord>,
    ) -> SessionRecord {
        SessionRecord {
            task: task.clone(),
            llm: llm.to_string(),
            transcript: self.transcript,
            attempts: self.attempts,
            status,
            self_corr: self.self_corr,
            final_code,
            final_stdout,
            generated_runtime_s,
            baseline,
        }
    }
}

enum Requested {
    Code(String),
    Overflow,
    ExtractionFailed,
}

/// Sends a request and extracts code from the reply. One retry with the same
/// request on an extraction failure; two consecutive failures give up.
fn request_code(
    client: &Client<'_>,
    session: &mut Session,
    kind: PromptKind,
    request: &ChatRequest,
) -> Result<Requested, PipelineError> {
    for _ in 0..2 {
        let response = match client.complete(request) {
            Ok(r) => r,
            Err(BackendError::ContextOverflow { .. }) => return Ok(Requested::Overflow),
            Err(e) => return Err(PipelineError::Backend(e)),
        };
        let prompt_text = request.user_messages.join("\n");
        session.record_exchange(kind, &prompt_text, &response.text);
        match crate::extract::extract_code(&response.text) {
            Ok(extracted) => return Ok(Requested::Code(extracted.code)),
            Err(_) => continue,
        }
    }
    Ok(Requested::ExtractionFailed)
}

/// The stderr text for a failed compile, mirroring the execution-side
/// substitutions for timeouts and silent failures.
fn compile_error_text(result: &ToolResult, timeout_s: f64) -> String {
    if result.timed_out {
        format!("compilation timed out after {timeout_s}s")
    } else if result.stderr.trim().is_empty() {
        if result.stdout.trim().is_empty() {
            "compiler exited with nonzero status and empty stderr".to_string()
        } else {
            // Some toolchains report errors on stdout.
            result.stdout.clone()
        }
    } else {
        result.stderr.clone()
    }
}

/// Tokens available for stderr in a correction prompt: a quarter of what the
/// context window has left after the response budget and the prompt's fixed
/// parts.
fn stderr_budget(
    profile: &LlmProfile,
    estimator: &dyn TokenEstimator,
    system_prompt: &str,
    template: &str,
    code: &str,
    command_line: &str,
) -> usize {
    let fixed = estimator.estimate(system_prompt)
        + estimator.estimate(template)
        + estimator.estimate(code)
        + estimator.estimate(command_line);
    let remaining = profile
        .context_length
        .saturating_sub(profile.max_response_tokens)
        .saturating_sub(fixed);
    remaining / 4
}

/// Runs one full translation session. See the module docs for the state
/// walk-through; terminal outcomes land in `SessionRecord::status`.
pub fn run_pipeline(
    task: &TranslationTask,
    env: &PipelineEnv<'_>,
) -> Result<SessionRecord, PipelineError> {
    std::fs::create_dir_all(env.workdir)?;
    let client = Client::with_estimator(env.backend, env.profile, env.estimator);
    let mut session = Session {
        transcript: Vec::new(),
        attempts: Vec::new(),
        self_corr: 0,
    };
    let llm = env.profile.name.clone();
    let lock_name = env.cfg.resource_lock.as_deref();

    // S0: the task must be viable before any token is spent.
    let baseline = match validate_baseline(
        task,
        env.source_spec,
        env.target_spec,
        env.workdir,
        &env.cfg.limits(),
        lock_name,
    )? {
        BaselineOutcome::Ok(record) => record,
        BaselineOutcome::Failed { record, .. } => {
            return Ok(session.finish(
                task,
                &llm,
                SessionStatus::BaselineFailed,
                None,
                None,
                None,
                Some(record),
            ));
        }
    };

    // S1: context preparation — knowledge of the target language, then a
    // self-generated description of the source program.
    let asset = load_knowledge_asset(env.target_spec, env.estimator)?;
    let overflow = |session: Session, baseline| {
        Ok(session.finish(
            task,
            &llm,
            SessionStatus::ContextOverflow,
            None,
            None,
            None,
            baseline,
        ))
    };
    let summary = match summarize_knowledge(&client, env.dict, &asset, env.cache) {
        Ok(s) => s,
        Err(PromptError::Backend(BackendError::ContextOverflow { .. })) => {
            return overflow(session, Some(baseline));
        }
        Err(e) => return Err(PipelineError::Prompt(e)),
    };
    if let Some(exchange) = &summary.exchange {
        session.record_exchange(
            PromptKind::KnowledgeSummary,
            &exchange.prompt,
            &exchange.response,
        );
    }
    let description =
        match describe_source(&client, env.dict, &env.source_spec.name, &task.source_code) {
            Ok(ex) => {
                session.record_exchange(PromptKind::SourceDescription, &ex.prompt, &ex.response);
                ex.response
            }
            Err(PromptError::Backend(BackendError::ContextOverflow { .. })) => {
                return overflow(session, Some(baseline));
            }
            Err(e) => return Err(PipelineError::Prompt(e)),
        };

    // S2: the four-part translation prompt.
    let bundle = match assemble_translation_prompt(
        env.dict,
        &task.direction,
        &asset.text,
        &summary.text,
        description.trim(),
        &task.source_code,
        env.profile,
        env.estimator,
    ) {
        Ok(b) => b,
        Err(PromptError::Backend(BackendError::ContextOverflow { .. })) => {
            return overflow(session, Some(baseline));
        }
        Err(e) => return Err(PipelineError::Prompt(e)),
    };
    let system_prompt = bundle.system_prompt.clone();
    let request = ChatRequest::new(Some(system_prompt.clone()), bundle.user_prompt, env.profile);
    let mut code = match request_code(&client, &mut session, PromptKind::Translation, &request)? {
        Requested::Code(code) => code,
        Requested::Overflow => return overflow(session, Some(baseline)),
        Requested::ExtractionFailed => {
            return Ok(session.finish(
                task,
                &llm,
                SessionStatus::ExtractionFailed,
                None,
                None,
                None,
                Some(baseline),
            ));
        }
    };

    // S3/S4: compile, execute, correct until success or a budget gives out.
    let mut version: u32 = 0;
    loop {
        version += 1;
        let code_path = env.workdir.join(format!(
            "{}__attempt{}.{}",
            task.app_name, version, env.target_spec.file_extension
        ));
        std::fs::write(&code_path, &code)?;
        let compiled = compile_with_timeout(
            &code_path,
            env.target_spec,
            env.workdir,
            env.cfg.compile_timeout_s,
        )?;
        session.attempts.push(AttemptRecord {
            version,
            code: code.clone(),
            results: vec![compiled.result.clone()],
        });

        let correction: (PromptKind, String, SessionStatus);
        if compiled.result.exit_ok {
            let run = execute(
                &compiled.binary_path,
                env.target_spec,
                &task.runtime_args,
                env.cfg.exec_timeout_s,
            )?;
            session
                .attempts
                .last_mut()
                .expect("attempt just pushed")
                .results
                .push(run.clone());
            if run.exit_ok {
                // S5: measure, persist stdout metadata, done.
                let runtime = match measure_runtime(
                    &compiled.binary_path,
                    env.target_spec,
                    &task.runtime_args,
                    env.cfg.n_runtime_runs,
                    env.cfg.exec_timeout_s,
                    lock_name,
                ) {
                    Ok(mean) => mean,
                    Err(ToolchainError::RunFailed { .. }) => run.wall_time_s,
                    Err(other) => return Err(other.into()),
                };
                let metadata = serde_json::json!({
                    "app": task.app_name,
                    "stdout": run.stdout,
                    "runtime_s": runtime,
                });
                std::fs::write(
                    env.workdir
                        .join(format!("{}__metadata.json", task.app_name)),
                    serde_json::to_string_pretty(&metadata).expect("metadata serializes"),
                )?;
                return Ok(session.finish(
                    task,
                    &llm,
                    SessionStatus::Success,
                    Some(code),
                    Some(run.stdout),
                    Some(runtime),
                    Some(baseline),
                ));
            }
            let stderr = execution_error_text(&run, env.cfg.exec_timeout_s);
            let budget = stderr_budget(
                env.profile,
                env.estimator,
                &system_prompt,
                &env.dict.exec_error,
                &code,
                &compiled.command_line,
            );
            let prompt = env.dict.exec_error_prompt(
                &code,
                &compiled.command_line,
                &stderr,
                budget,
                env.estimator,
            );
            correction = (
                PromptKind::ExecCorrection,
                prompt,
                SessionStatus::ExecBudgetExceeded,
            );
        } else {
            let stderr = compile_error_text(&compiled.result, env.cfg.compile_timeout_s);
            let budget = stderr_budget(
                env.profile,
                env.estimator,
                &system_prompt,
                &env.dict.compile_error,
                &code,
                &compiled.command_line,
            );
            let prompt = env.dict.compile_error_prompt(
                &code,
                &compiled.command_line,
                &stderr,
                budget,
                env.estimator,
            );
            correction = (
                PromptKind::CompileCorrection,
                prompt,
                SessionStatus::CompileBudgetExceeded,
            );
        }

        let (kind, prompt, exceeded_status) = correction;
        if session.self_corr + 1 > env.cfg.max_self_corr {
            return Ok(session.finish(
                task,
                &llm,
                exceeded_status,
                None,
                None,
                None,
                Some(baseline),
            ));
        }
        session.self_corr += 1;
        let request = ChatRequest::new(Some(system_prompt.clone()), prompt, env.profile);
        code = match request_code(&client, &mut session, kind, &request)? {
            Requested::Code(code) => code,
            Requested::Overflow => return overflow(session, Some(baseline)),
            Requested::ExtractionFailed => {
                return Ok(session.finish(
                    task,
                    &llm,
                    SessionStatus::ExtractionFailed,
                    None,
                    None,
                    None,
                    Some(baseline),
                ));
            }
        };
    }
}

/// Writes the session record as JSON plus a readable transcript log; returns
/// both paths.
pub fn save_session(
    record: &SessionRecord,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), PipelineError> {
    std::fs::create_dir_all(dir)?;
    let stem = format!(
        "{}__{}__{}-to-{}",
        record.task.app_name,
        record.llm,
        record.task.direction.source,
        record.task.direction.target
    );
    let json_path = dir.join(format!("{stem}.session.json"));
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(record).expect("record serializes"),
    )?;

    let mut log = String::new();
    log.push_str(&format!(
        "app: {}\nllm: {}\ndirection: {}\nstatus: {}\nself_corr: {}\n",
        record.task.app_name, record.llm, record.task.direction, record.status, record.self_corr
    ));
    for (i, entry) in record.transcript.iter().enumerate() {
        log.push_str(&format!(
            "\n=== exchange {} [{:?}] at {} ===\n--- prompt ---\n{}\n--- response ---\n{}\n",
            i + 1,
            entry.kind,
            entry.timestamp.to_rfc3339(),
            entry.prompt,
            entry.response
        ));
    }
    let log_path = dir.join(format!("{stem}.transcript.log"));
    std::fs::write(&log_path, log)?;
    Ok((json_path, log_path))
}
