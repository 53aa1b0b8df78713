//! One complete translation session, fully offline.
//!
//! Two pseudo-languages ("serial" and "fast") are both plain C++ compiled
//! with the host g++, and the model is a scripted backend replaying three
//! canned replies: a knowledge summary, a source description, and the
//! translated program. The pipeline validates the baseline pair, assembles
//! the prompts, compiles and runs the generated code, and measures it.
//!
//!     cargo run --example scripted_translation

use std::collections::BTreeMap;
use std::error::Error;

use parashift::prelude::*;

const SOURCE_PROGRAM: &str = r#"#include <cstdio>

int main() {
    long sum = 0;
    for (long i = 1; i <= 5000; ++i) {
        sum += i * i;
    }
    std::printf("terms 5000\n");
    std::printf("sum %ld\n", sum);
    return 0;
}
"#;

const TARGET_PROGRAM: &str = r#"#include <cstdio>

int main() {
    long total = 0;
    for (long i = 1; i <= 5000; ++i) {
        total += i * i;
    }
    std::printf("terms 5000\n");
    std::printf("sum %ld\n", total);
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
        compile_cmd: "g++ -O2 -std=c++17 {src} -o {out}".to_string(),
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
    let backend = ScriptedBackend::new([
        "fast is C++17 compiled with g++ -O2; programs print results with printf.".to_string(),
        "A program that sums the squares of 1..5000 and prints the term count and sum.".to_string(),
        format!("Here is the complete translated program:\n```cpp\n{TARGET_PROGRAM}```\n"),
    ]);

    let task = TranslationTask {
        app_name: "sum-squares".to_string(),
        direction: Direction::new("serial", "fast"),
        source_code: SOURCE_PROGRAM.to_string(),
        reference_target_code: Some(TARGET_PROGRAM.to_string()),
        runtime_args: vec![],
    };
    let cache = SummaryCache::new();
    let cfg = LoopConfig {
        n_runtime_runs: 3,
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
    let (json_path, log_path) = save_session(&record, &workdir)?;

    println!("app:        {}", record.task.app_name);
    println!("direction:  {}", record.task.direction);
    println!("status:     {}", record.status);
    println!("self_corr:  {}", record.self_corr);
    println!("exchanges:  {}", record.transcript.len());
    println!("attempts:   {}", record.attempts.len());
    if let Some(runtime) = record.generated_runtime_s {
        println!(
            "runtime:    {runtime:.4} s (mean of {} runs)",
            cfg.n_runtime_runs
        );
    }
    if let (Some(code), Some(reference)) = (&record.final_code, &task.reference_target_code) {
        println!("sim_t:      {:.4}", sim_t(reference, code));
        println!("sim_l:      {:.4}", sim_l(reference, code));
    }
    if let Some(stdout) = &record.final_stdout {
        println!("stdout:     {:?}", stdout);
    }
    println!("session:    {}", json_path.display());
    println!("transcript: {}", log_path.display());
    Ok(())
}
