//! A tiny two-app benchmark matrix, fully offline, with resume.
//!
//! Two apps × two directions × one scripted model = four cells. Each cell
//! runs the whole pipeline (baseline, prompts, compile, run, measure) against
//! the host g++. Completed cells persist under `rows/`; running the matrix a
//! second time reuses every row instead of recomputing it.
//!
//!     cargo run --example bench_matrix

use std::collections::BTreeMap;
use std::error::Error;
use std::path::Path;

use parashift::bench::{
    load_rows, run_matrix, BackendSource, BenchLlm, MatrixConfig, ScriptBook,
    DEFAULT_RUNTIME_THRESHOLD, DEFAULT_SIM_THRESHOLD,
};
use parashift::prelude::*;

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

[[direction]]
source = "fast"
target = "serial"
system = "You translate fast programs into serial programs. Surround your new generated code with the three characters ```."
translate = "rewrite the following fast program as an equivalent serial program"
"#;

fn program(var: &str, label: &str, n: u64) -> String {
    format!(
        r#"#include <cstdio>

int main() {{
    unsigned long long {var} = 0;
    for (unsigned long long i = 1; i <= {n}ULL; ++i) {{
        {var} += i;
    }}
    std::printf("{label} n {n}\n");
    std::printf("{label} sum %llu\n", {var});
    return 0;
}}
"#
    )
}

fn language(name: &str, dir: &Path) -> Result<LanguageSpec, Box<dyn Error>> {
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

    // Suite manifest on disk, like a real checkout would have.
    let mut manifest_text = String::from("languages = [\"serial\", \"fast\"]\n");
    let mut book = ScriptBook::new();
    for (app, n) in [("triangle", 4_000u64), ("gauss", 9_000u64)] {
        let serial = program("acc", app, n);
        let fast = program("total", app, n);
        std::fs::write(dir.path().join(format!("{app}_serial.cpp")), &serial)?;
        std::fs::write(dir.path().join(format!("{app}_fast.cpp")), &fast)?;
        manifest_text.push_str(&format!(
            "\n[[entry]]\napp = \"{app}\"\ncategory = \"Math\"\n\
             [entry.sources]\nserial = \"{app}_serial.cpp\"\nfast = \"{app}_fast.cpp\"\n"
        ));
        for (direction, code) in [
            (Direction::new("serial", "fast"), &fast),
            (Direction::new("fast", "serial"), &serial),
        ] {
            book.set_cell(
                ScriptBook::cell_key(app, &direction),
                vec![
                    "The dialect is C++17 compiled with g++.".to_string(),
                    format!("A program that sums the integers 1..{n} and prints the total."),
                    format!("Here is the complete translated program:\n```cpp\n{code}```\n"),
                ],
            );
        }
    }
    let manifest_path = dir.path().join("suite.toml");
    std::fs::write(&manifest_path, manifest_text)?;
    let manifest = load_suite(&manifest_path)?;

    let llms = vec![BenchLlm {
        profile: LlmProfile {
            name: "replay".to_string(),
            model_id: "replay-1".to_string(),
            context_length: 32_768,
            max_response_tokens: 2_048,
            temperature: 0.2,
        },
        source: BackendSource::Scripted(book),
    }];
    let directions = vec![
        Direction::new("serial", "fast"),
        Direction::new("fast", "serial"),
    ];
    let cfg = MatrixConfig {
        languages: BTreeMap::from([
            ("serial".to_string(), language("serial", dir.path())?),
            ("fast".to_string(), language("fast", dir.path())?),
        ]),
        dict: PromptDictionary::from_toml_str(PROMPTS)?,
        loop_cfg: LoopConfig {
            n_runtime_runs: 1,
            resource_lock: None,
            ..LoopConfig::default()
        },
        out_dir: dir.path().join("out"),
        workers: 2,
    };

    let started = std::time::Instant::now();
    let rows = run_matrix(&manifest, &llms, &directions, &cfg)?;
    let first_run = started.elapsed();
    let stats = summarize(
        &rows,
        DEFAULT_RUNTIME_THRESHOLD,
        DEFAULT_SIM_THRESHOLD,
        SimMetric::Token,
    );
    print!("{}", parashift::bench::render_summary("matrix", &stats));

    println!("\n{}", render_report(&rows, ReportFormat::Markdown));

    // Second run: every cell resumes from its persisted row.
    let started = std::time::Instant::now();
    let resumed = run_matrix(&manifest, &llms, &directions, &cfg)?;
    let second_run = started.elapsed();
    println!(
        "resume: first run {:.2} s, second run {:.3} s, rows identical: {}",
        first_run.as_secs_f64(),
        second_run.as_secs_f64(),
        resumed == rows
    );

    let persisted = load_rows(&cfg.out_dir.join("rows"))?;
    println!("persisted rows on disk: {}", persisted.len());
    Ok(())
}
