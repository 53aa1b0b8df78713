//! Self-correcting, backend-agnostic translation of parallel code between
//! frameworks (reference pair: OpenMP target offload <-> CUDA), with an
//! evaluation harness for benchmarking translation quality.
//!
//! The pipeline compiles and runs whatever the model produces, feeds
//! compiler and runtime diagnostics back as correction prompts, and keeps a
//! full audit trail per session. A deterministic scripted backend makes every
//! stage replayable offline.
//!
//! Start with the runnable examples:
//!
//! - `scripted_translation` — one end-to-end session on a scripted backend
//! - `self_correction_loop` — watch a compile failure get corrected
//! - `prompt_gallery` — every prompt the default dictionary renders
//! - `extract_blocks` — code extraction over assorted response shapes
//! - `similarity_metrics` — Sim-T / Sim-L / runtime ratio on small snippets
//! - `toolchain_probe` — compile, run, and time a program via a language spec
//! - `fixture_report` — summary statistics and reports over the bundled
//!   result fixtures
//! - `bench_matrix` — a tiny two-app benchmark matrix, fully offline
//!
//! ```no_run
//! use parashift::prelude::*;
//!
//! let dict = PromptDictionary::default();
//! let profile = LlmProfile {
//!     name: "demo".into(),
//!     model_id: "demo".into(),
//!     context_length: 32_768,
//!     max_response_tokens: 2_048,
//!     temperature: 0.2,
//! };
//! let backend = ScriptedBackend::new(["a summary", "a description", "```\nint main(){}\n```"]);
//! # let (source_spec, target_spec): (LanguageSpec, LanguageSpec) = unimplemented!();
//! # let task: TranslationTask = unimplemented!();
//! let cache = SummaryCache::new();
//! let cfg = LoopConfig::default();
//! let env = PipelineEnv {
//!     backend: &backend,
//!     profile: &profile,
//!     estimator: &ByteEstimator,
//!     dict: &dict,
//!     source_spec: &source_spec,
//!     target_spec: &target_spec,
//!     cache: &cache,
//!     workdir: std::path::Path::new("work"),
//!     cfg: &cfg,
//! };
//! let record = run_pipeline(&task, &env).unwrap();
//! println!("{}: {} corrections", record.status, record.self_corr);
//! ```

pub mod backend;
pub mod bench;
pub mod cli;
pub mod config;
pub mod domain;
pub mod extract;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod toolchain;

/// FNV-1a 64-bit; stable across processes and releases, used for cache keys
/// and resume fingerprints.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub mod prelude {
    pub use crate::backend::{
        estimate_tokens, ByteEstimator, ChatBackend, ChatRequest, ChatResponse, Client,
        HttpBackend, ScriptedBackend, TokenEstimator,
    };
    pub use crate::bench::{
        load_suite, render_report, run_matrix, summarize, ReportFormat, ResultRow, RowOutcome,
        SimMetric, SuiteManifest, SummaryStats,
    };
    pub use crate::config::Config;
    pub use crate::domain::{
        validate_language_spec, Direction, KnowledgeAsset, LanguageSpec, LlmProfile, MetricsRecord,
        OutputVerdict, SessionRecord, SessionStatus, ToolKind, ToolResult, TranslationTask,
    };
    pub use crate::extract::{extract_code, ExtractedCode};
    pub use crate::metrics::{
        compare_output, render4, runtime_ratio, sim_l, sim_t, tokenize_code, CompareMode,
    };
    pub use crate::pipeline::{
        load_knowledge_asset, run_pipeline, save_session, LoopConfig, PipelineEnv,
    };
    pub use crate::prompt::{
        assemble_translation_prompt, describe_source, summarize_knowledge, PromptBundle,
        PromptDictionary, SummaryCache,
    };
    pub use crate::toolchain::{
        compile, execute, measure_runtime, validate_baseline, BaselineOutcome, RunLimits,
    };
}
