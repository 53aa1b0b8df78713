//! One TOML document wires the whole tool together: language specs, LLM
//! profiles and their backends, the prompt dictionary, loop knobs, and
//! default paths.
//!
//! ```toml
//! [paths]
//! prompts = "prompts.toml"        # optional; bundled dictionary otherwise
//! output_dir = "out"
//! manifest = "suite.toml"         # optional; --manifest overrides
//!
//! [loop]
//! max_self_corr = 50
//! compile_timeout_s = 120.0
//! exec_timeout_s = 300.0
//! n_runtime_runs = 3
//! resource_lock = "accelerator"   # "" disables serialization
//!
//! [language.cuda]
//! file_extension = "cu"
//! compile_cmd = "nvcc -O3 {src} -o {out}"
//! run_cmd = "{bin} {args}"
//! knowledge_asset = "knowledge/cuda.md"
//!
//! [llm.codestral]
//! model_id = "codestral:22b"
//! context_length = 32768
//! max_response_tokens = 4096
//! temperature = 0.2
//!
//! [llm.codestral.backend]
//! kind = "http"
//! base_url = "http://localhost:11434/v1/chat/completions"
//! api_key_env = "LLM_API_KEY"     # optional; key read from the environment
//! ```
//!
//! Relative paths are resolved against the config file's directory. API keys
//! are only ever named here, never written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::backend::{HttpBackend, RetryPolicy};
use crate::bench::{BackendSource, BenchError, BenchLlm, ScriptBook};
use crate::domain::{validate_language_spec, LanguageSpec, LlmProfile, SpecError};
use crate::pipeline::LoopConfig;
use crate::prompt::{PromptDictionary, PromptError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("language `{name}`: {source}")]
    InvalidLanguage {
        name: String,
        #[source]
        source: SpecError,
    },
    #[error("llm `{name}`: {message}")]
    InvalidLlm { name: String, message: String },
    #[error("no language `{name}` in the configuration")]
    UnknownLanguage { name: String },
    #[error("no llm `{name}` in the configuration")]
    UnknownLlm { name: String },
    #[error(transparent)]
    Replies(#[from] BenchError),
    #[error(transparent)]
    Prompts(#[from] PromptError),
}

/// How completions for one profile are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendConfig {
    Http {
        base_url: String,
        api_key_env: Option<String>,
        retry: RetryPolicy,
    },
    Scripted {
        replies: PathBuf,
    },
}

/// One `[llm.<name>]` block: the profile plus its backend wiring.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub profile: LlmProfile,
    pub backend: BackendConfig,
}

impl LlmConfig {
    /// Builds the backend for matrix cells: HTTP backends are shared, reply
    /// books make a fresh scripted backend per cell.
    pub fn backend_source(&self) -> Result<BackendSource, ConfigError> {
        match &self.backend {
            BackendConfig::Http {
                base_url,
                api_key_env,
                retry,
            } => Ok(BackendSource::Shared(Arc::new(HttpBackend::new(
                base_url.clone(),
                api_key_env.clone(),
                retry.clone(),
            )))),
            BackendConfig::Scripted { replies } => {
                Ok(BackendSource::Scripted(ScriptBook::load(replies)?))
            }
        }
    }

    pub fn bench_llm(&self) -> Result<BenchLlm, ConfigError> {
        Ok(BenchLlm {
            profile: self.profile.clone(),
            source: self.backend_source()?,
        })
    }
}

/// The loaded, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub prompts_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub manifest_path: Option<PathBuf>,
    pub loop_cfg: LoopConfig,
    pub languages: BTreeMap<String, LanguageSpec>,
    pub llms: BTreeMap<String, LlmConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    prompts: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    manifest: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoop {
    max_self_corr: Option<u32>,
    compile_timeout_s: Option<f64>,
    exec_timeout_s: Option<f64>,
    n_runtime_runs: Option<usize>,
    resource_lock: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLanguage {
    file_extension: String,
    compile_cmd: String,
    run_cmd: String,
    knowledge_asset: Option<PathBuf>,
    #[serde(default)]
    env: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLlm {
    model_id: String,
    context_length: usize,
    max_response_tokens: usize,
    #[serde(default = "default_temperature")]
    temperature: f64,
    backend: RawBackend,
}

fn default_temperature() -> f64 {
    0.2
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawBackend {
    Http {
        base_url: String,
        api_key_env: Option<String>,
        max_retries: Option<usize>,
        backoff_ms: Option<u64>,
    },
    Scripted {
        replies: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    paths: RawPaths,
    #[serde(rename = "loop", default)]
    loop_cfg: RawLoop,
    #[serde(default)]
    language: BTreeMap<String, RawLanguage>,
    #[serde(default)]
    llm: BTreeMap<String, RawLlm>,
}

fn resolve(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_relative() {
        base.join(path)
    } else {
        path
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Config::from_toml_str(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Parses a config document; `base_dir` anchors its relative paths.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: base_dir.join("<config>"),
            message: e.to_string(),
        })?;

        let mut loop_cfg = LoopConfig::default();
        if let Some(v) = raw.loop_cfg.max_self_corr {
            loop_cfg.max_self_corr = v;
        }
        if let Some(v) = raw.loop_cfg.compile_timeout_s {
            loop_cfg.compile_timeout_s = v;
        }
        if let Some(v) = raw.loop_cfg.exec_timeout_s {
            loop_cfg.exec_timeout_s = v;
        }
        if let Some(v) = raw.loop_cfg.n_runtime_runs {
            loop_cfg.n_runtime_runs = v;
        }
        if let Some(lock) = raw.loop_cfg.resource_lock {
            loop_cfg.resource_lock = if lock.is_empty() { None } else { Some(lock) };
        }

        let mut languages = BTreeMap::new();
        for (name, raw_lang) in raw.language {
            let mut spec = LanguageSpec::new(
                name.clone(),
                raw_lang.file_extension,
                raw_lang.compile_cmd,
                raw_lang.run_cmd,
            );
            spec.knowledge_asset = raw_lang.knowledge_asset.map(|p| resolve(base_dir, p));
            spec.env = raw_lang.env;
            validate_language_spec(&spec).map_err(|source| ConfigError::InvalidLanguage {
                name: name.clone(),
                source,
            })?;
            languages.insert(name, spec);
        }

        let mut llms = BTreeMap::new();
        for (name, raw_llm) in raw.llm {
            if raw_llm.context_length == 0 {
                return Err(ConfigError::InvalidLlm {
                    name,
                    message: "context_length must be positive".to_string(),
                });
            }
            if raw_llm.max_response_tokens >= raw_llm.context_length {
                return Err(ConfigError::InvalidLlm {
                    name,
                    message: "max_response_tokens must leave room in the context window"
                        .to_string(),
                });
            }
            let profile = LlmProfile {
                name: name.clone(),
                model_id: raw_llm.model_id,
                context_length: raw_llm.context_length,
                max_response_tokens: raw_llm.max_response_tokens,
                temperature: raw_llm.temperature,
            };
            let backend = match raw_llm.backend {
                RawBackend::Http {
                    base_url,
                    api_key_env,
                    max_retries,
                    backoff_ms,
                } => {
                    let mut retry = RetryPolicy::default();
                    if let Some(v) = max_retries {
                        retry.max_retries = v;
                    }
                    if let Some(v) = backoff_ms {
                        retry.backoff_ms = v;
                    }
                    BackendConfig::Http {
                        base_url,
                        api_key_env,
                        retry,
                    }
                }
                RawBackend::Scripted { replies } => BackendConfig::Scripted {
                    replies: resolve(base_dir, replies),
                },
            };
            llms.insert(name, LlmConfig { profile, backend });
        }

        Ok(Config {
            prompts_path: raw.paths.prompts.map(|p| resolve(base_dir, p)),
            output_dir: resolve(
                base_dir,
                raw.paths.output_dir.unwrap_or_else(|| "out".into()),
            ),
            manifest_path: raw.paths.manifest.map(|p| resolve(base_dir, p)),
            loop_cfg,
            languages,
            llms,
        })
    }

    /// The prompt dictionary: the configured file, or the bundled default.
    pub fn dictionary(&self) -> Result<PromptDictionary, ConfigError> {
        match &self.prompts_path {
            Some(path) => Ok(PromptDictionary::load(path)?),
            None => Ok(PromptDictionary::default()),
        }
    }

    pub fn language(&self, name: &str) -> Result<&LanguageSpec, ConfigError> {
        self.languages
            .get(name)
            .ok_or_else(|| ConfigError::UnknownLanguage {
                name: name.to_string(),
            })
    }

    pub fn llm(&self, name: &str) -> Result<&LlmConfig, ConfigError> {
        self.llms.get(name).ok_or_else(|| ConfigError::UnknownLlm {
            name: name.to_string(),
        })
    }

    /// All configured LLMs as matrix columns, in name order.
    pub fn bench_llms(&self) -> Result<Vec<BenchLlm>, ConfigError> {
        self.llms.values().map(LlmConfig::bench_llm).collect()
    }
}
