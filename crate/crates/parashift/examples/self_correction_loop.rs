//! Watch the self-correction loop earn its keep.
//!
//! The scripted model first answers with a program missing a semicolon. The
//! pipeline compiles it, captures the compiler's stderr, wraps it in the
//! correction template, and asks again; the second answer compiles and runs.
//! The transcript printed at the end shows the full conversation.
//!
//!     cargo run --example self_correction_loop

use std::collections::BTreeMap;
use std::error::Error;

use parashift::prelude::*;

const GOOD: &str = r#"#include <cstdio>

int main() {
    int checksum = 0;
    for (int i = 0; i < 100; ++i) {
        checksum ^= i * 31;
    }
    std::printf("checksum %d\n", checksum);
    return 0;
}
"#;

const PROMPTS: &str = r#"
general_system_prompt = "You are a careful translator between two in-house C++ dialects."
compile_error = "{code}\n-- The above code was compiled with {compiler_cmd} and produced the following compile error: {stderr}. Re-factor the above code with a fix to eliminate the stated error."
exec_error = "{code}\n-- The above code was executed after a successful compile with {compiler_cmd} and produced the following execution error: {stderr}. Re-factor the above code with a fix to eliminate the stated error."
knowledge_summary = "Summarize the following {language} reference:\n{knowledge}"
source_description = "Describe the following {language} program:\n{code}"

[[direction]]
source = "serial"
target = "fast"
system = "You translate serial programs into fast programs. Surround your new generated code with the three characters ```."
translate = "rewrite the following serial program as an equivalent fast program"
"#;

fn language(name: &str, dir: &std::path::Path) -> Result<LanguageSpec, Box<dyn Error>> {
    let asset = dir.join(format!("{name}.md"));
    std::fs::write(&asset, format!("{name}: C++17, g++, printf output.\n"))?;
    Ok(LanguageSpec {
        name: name.to_string(),
        file_extension: "cpp".to_string(),
        compile_cmd: "g++ -O0 -std=c++17 {src} -o {out}".to_string(),
        run_cmd: "{bin} {args}".to_string(),
        knowledge_asset: Some(asset),
        env: BTreeMap::new(),
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let source_spec = language("serial", dir.path())?;
    let target_spec = language("fast", dir.path())?;
    let dict = PromptDictionary::from_toml_str(PROMPTS)?;
    let profile = LlmProfile {
        name: "replay".to_string(),
        model_id: "replay-1".to_string(),
        context_length: 32_768,
        max_response_tokens: 2_048,
        temperature: 0.2,
    };
    let broken = GOOD.replace("int checksum = 0;", "int checksum = 0");
    let backend = ScriptedBackend::new([
        "fast is C++17 compiled with g++; programs print results with printf.".to_string(),
        "A program that xors together the first hundred multiples of 31.".to_string(),
        format!("First try:\n```cpp\n{broken}```\n"),
        format!("Apologies, the declaration was missing its semicolon:\n```cpp\n{GOOD}```\n"),
    ]);

    let task = TranslationTask {
        app_name: "checksum".to_string(),
        direction: Direction::new("serial", "fast"),
        source_code: GOOD.to_string(),
        reference_target_code: Some(GOOD.to_string()),
        runtime_args: vec![],
    };
    let cache = SummaryCache::new();
    let cfg = LoopConfig {
        n_runtime_runs: 1,
        resource_lock: None,
        ..LoopConfig::default()
    };
    let workdir = dir.path().join("session");
    let env = PipelineEnv {
        backend: &backend,
        profile: &profile,
        estimator: &ByteEstimator,
        dict: &dict,
        source_spec: &source_spec,
        target_spec: &target_spec,
        cache: &cache,
        workdir: &workdir,
        cfg: &cfg,
    };

    let record = run_pipeline(&task, &env)?;
    println!(
        "status: {}   self_corr: {}\n",
        record.status, record.self_corr
    );

    for attempt in &record.attempts {
        println!("attempt {}:", attempt.version);
        for result in &attempt.results {
            println!(
                "  {:?}: exit_ok = {}{}",
                result.kind,
                result.exit_ok,
                if result.stderr.is_empty() {
                    String::new()
                } else {
                    format!(", stderr = {:?}", first_line(&result.stderr))
                }
            );
        }
    }

    println!("\ntranscript:");
    for (i, entry) in record.transcript.iter().enumerate() {
        println!("  {}. [{:?}]", i + 1, entry.kind);
        println!("     prompt   starts: {:?}", first_line(&entry.prompt));
        println!("     response starts: {:?}", first_line(&entry.response));
    }
    Ok(())
}

fn first_line(text: &str) -> String {
    let line = text.lines().next().unwrap_or_default();
    let mut shown: String = line.chars().take(72).collect();
    if shown.len() < line.len() {
        shown.push('…');
    }
    shown
}
