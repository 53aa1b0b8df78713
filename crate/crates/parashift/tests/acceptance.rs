//! Acceptance gate: one test per release criterion, each printing a single
//! `[PASS]`/`[FAIL] criterion N` line (run with `--nocapture` to see all of
//! them; failures always show theirs).
//!
//! Everything here runs offline: the bundled result fixtures stand in for
//! live measurements, scripted backends stand in for models, and two
//! g++-compiled pseudo-languages ("alpha" and "beta") stand in for the real
//! translation pair. A host `g++` is the only external requirement.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;

use parashift::backend::BackendError;
use parashift::bench::fixtures;
use parashift::prelude::*;
use parashift::prompt::PromptError;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn criterion(n: u32, label: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {n}: {label}");
    if let Err(panic) = outcome {
        std::panic::resume_unwind(panic);
    }
}

// ---------------------------------------------------------------------------
// 1. Ratio regression over the bundled result tables
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_fixture_ratio_regression() {
    criterion(
        1,
        "round4(source/generated) equals the printed ratio on every non-erratum success row",
        || {
            // Spot anchors first: these four recompute exactly.
            for (source, generated, want) in [
                (1.2440, 1.2039, "1.0333"),
                (0.0140, 0.0045, "3.1111"),
                (57.3354, 1.4433, "39.7252"),
                (45.1242, 0.6805, "66.3104"),
            ] {
                assert_eq!(render4(runtime_ratio(source, generated).unwrap()), want);
            }

            let tables = [
                (Direction::new("openmp", "cuda"), fixtures::openmp_to_cuda()),
                (Direction::new("cuda", "openmp"), fixtures::cuda_to_openmp()),
            ];
            let mut checked = 0usize;
            let mut mismatches = Vec::new();
            for (direction, rows) in &tables {
                for row in rows.iter().filter(|r| r.is_success() && !r.erratum) {
                    let source = fixtures::source_runtime(&row.app, &direction.target)
                        .expect("every fixture app has a reference runtime");
                    let recomputed =
                        render4(runtime_ratio(source, row.runtime_s.unwrap()).unwrap());
                    let printed = render4(row.ratio.unwrap());
                    checked += 1;
                    if recomputed != printed {
                        mismatches.push(format!(
                            "{direction} {} / {}: printed {printed}, recomputed {recomputed} \
                         (source {source}, generated {})",
                            row.llm,
                            row.app,
                            row.runtime_s.unwrap(),
                        ));
                    }
                }
            }
            assert_eq!(
                checked, 65,
                "32 + 34 success rows minus the one flagged erratum"
            );
            assert!(
                mismatches.is_empty(),
                "{} of {checked} rows disagree in the fourth decimal; the published tables \
             were evidently computed from higher-precision runtimes than they print:\n  {}",
                mismatches.len(),
                mismatches.join("\n  ")
            );
        },
    );
}

// ---------------------------------------------------------------------------
// 2. Summary statistics over the same tables
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_fixture_summary_statistics() {
    criterion(
        2,
        "success and first-attempt rates match the published summaries",
        || {
            let o2c = Direction::new("openmp", "cuda");
            let c2o = Direction::new("cuda", "openmp");
            let pct = |value: f64| format!("{value:.1}");

            let stats = summarize(
                &fixtures::result_rows(&o2c, &fixtures::openmp_to_cuda()),
                parashift::bench::DEFAULT_RUNTIME_THRESHOLD,
                parashift::bench::DEFAULT_SIM_THRESHOLD,
                SimMetric::Token,
            );
            assert_eq!((stats.n_total, stats.n_success), (40, 32));
            assert_eq!(pct(stats.success_rate), "80.0");
            assert_eq!(stats.n_first_attempt, 21);
            assert_eq!(pct(stats.pct_first_attempt), "65.6");

            let stats = summarize(
                &fixtures::result_rows(&c2o, &fixtures::cuda_to_openmp()),
                parashift::bench::DEFAULT_RUNTIME_THRESHOLD,
                parashift::bench::DEFAULT_SIM_THRESHOLD,
                SimMetric::Token,
            );
            assert_eq!((stats.n_total, stats.n_success), (40, 34));
            assert_eq!(pct(stats.success_rate), "85.0");
            // The published per-row table supports 18 first-attempt successes
            // while the published rate (55.9% of 34) implies 19; either count is
            // accepted.
            assert!(
                (18..=19).contains(&stats.n_first_attempt),
                "first-attempt count {} outside the accepted 18..=19",
                stats.n_first_attempt
            );
            assert_eq!(pct(100.0 * 19.0 / 34.0), "55.9");
        },
    );
}

// ---------------------------------------------------------------------------
// Shared scaffolding for the live-pipeline criteria
// ---------------------------------------------------------------------------

/// Prompt dictionary for the two g++-compiled pseudo-languages.
const TEST_PROMPTS_TOML: &str = r#"
general_system_prompt = "You are a careful translator between two in-house C++ dialects."
compile_error = "{code}\n-- The above code was compiled with {compiler_cmd} and produced the following compile error: {stderr}. Re-factor the above code with a fix to eliminate the stated error."
exec_error = "{code}\n-- The above code was executed after a successful compile with {compiler_cmd} and produced the following execution error: {stderr}. Re-factor the above code with a fix to eliminate the stated error."
knowledge_summary = "Summarize the following {language} reference:\n{knowledge}"
source_description = "Describe the following {language} program:\n{code}"

[[direction]]
source = "alpha"
target = "beta"
system = "You translate alpha programs into beta programs. Surround your new generated code with the three characters ```."
translate = "rewrite the following alpha program as an equivalent beta program"

[[direction]]
source = "beta"
target = "alpha"
system = "You translate beta programs into alpha programs. Surround your new generated code with the three characters ```."
translate = "rewrite the following beta program as an equivalent alpha program"
"#;

const SUMMARY_REPLY: &str = "beta is plain C++17; programs print their results with printf and \
                             finish with one Total time line.";
const DESCRIPTION_REPLY: &str = "A program that sums the integers from 1 to 2000 and prints the \
                                 count, the sum, and the elapsed time.";

/// Payload-identical programs that differ only in an internal variable name,
/// so translated output matches the reference byte for byte except for the
/// timing line.
fn cxx_sum_program(var: &str) -> String {
    format!(
        r#"#include <cstdio>
#include <ctime>

int main() {{
    std::clock_t t0 = std::clock();
    unsigned long long {var} = 0;
    for (unsigned long long i = 1; i <= 2000ULL; ++i) {{
        {var} += i;
    }}
    std::printf("n 2000\n");
    std::printf("sum %llu\n", {var});
    std::printf("Total time: %.6f s\n", double(std::clock() - t0) / CLOCKS_PER_SEC);
    return 0;
}}
"#
    )
}

fn alpha_main() -> String {
    cxx_sum_program("acc")
}

fn beta_main() -> String {
    cxx_sum_program("total")
}

/// Fails to compile: the accumulator declaration lost its semicolon.
fn broken_beta() -> String {
    beta_main().replace(
        "unsigned long long total = 0;",
        "unsigned long long total = 0",
    )
}

/// Compiles, then exits nonzero with a diagnostic.
const EXEC_FAIL_BETA: &str = r#"#include <cstdio>

int main() {
    std::fprintf(stderr, "invalid work size\n");
    return 2;
}
"#;

fn wrap_reply(code: &str) -> String {
    format!("Here is the complete translated program:\n```cpp\n{code}```\n")
}

fn pseudo_language(name: &str, dir: &Path) -> LanguageSpec {
    let asset = dir.join(format!("{name}.md"));
    std::fs::write(
        &asset,
        format!("{name} quick reference: C++17 compiled with g++; printf output; one Total time line.\n"),
    )
    .unwrap();
    LanguageSpec {
        name: name.to_string(),
        file_extension: "cpp".to_string(),
        compile_cmd: "g++ -O0 -std=c++17 {src} -o {out}".to_string(),
        run_cmd: "{bin} {args}".to_string(),
        knowledge_asset: Some(asset),
        env: BTreeMap::new(),
    }
}

fn scripted_profile() -> LlmProfile {
    LlmProfile {
        name: "scripted".to_string(),
        model_id: "scripted-1".to_string(),
        context_length: 32_768,
        max_response_tokens: 2_048,
        temperature: 0.2,
    }
}

struct PipelineRun {
    record: SessionRecord,
    consumed: usize,
    remaining: usize,
}

fn run_scripted_pipeline(
    dir: &Path,
    tag: &str,
    source_code: String,
    replies: Vec<String>,
    max_self_corr: u32,
    profile: &LlmProfile,
) -> PipelineRun {
    let source_spec = pseudo_language("alpha", dir);
    let target_spec = pseudo_language("beta", dir);
    let dict = PromptDictionary::from_toml_str(TEST_PROMPTS_TOML).unwrap();
    let backend = ScriptedBackend::new(replies);
    let cache = SummaryCache::new();
    let cfg = LoopConfig {
        max_self_corr,
        compile_timeout_s: 60.0,
        exec_timeout_s: 60.0,
        n_runtime_runs: 1,
        resource_lock: None,
    };
    let task = TranslationTask {
        app_name: "demo".to_string(),
        direction: Direction::new("alpha", "beta"),
        source_code,
        reference_target_code: Some(beta_main()),
        runtime_args: vec![],
    };
    let workdir = dir.join(tag);
    let env = PipelineEnv {
        backend: &backend,
        profile,
        estimator: &ByteEstimator,
        dict: &dict,
        source_spec: &source_spec,
        target_spec: &target_spec,
        cache: &cache,
        workdir: &workdir,
        cfg: &cfg,
    };
    let record = run_pipeline(&task, &env).unwrap();
    PipelineRun {
        record,
        consumed: backend.consumed(),
        remaining: backend.remaining(),
    }
}

fn compile_results(record: &SessionRecord) -> Vec<&ToolResult> {
    record
        .attempts
        .iter()
        .flat_map(|a| a.results.iter())
        .filter(|r| matches!(r.kind, ToolKind::Compile))
        .collect()
}

// ---------------------------------------------------------------------------
// 3. Self-correction loop behavior
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_self_correction_loop() {
    criterion(
        3,
        "k compile failures cost k corrections; budgets halt without extra calls",
        || {
            let dir = tempfile::tempdir().unwrap();

            for k in 0..=10u32 {
                let mut replies = vec![SUMMARY_REPLY.to_string(), DESCRIPTION_REPLY.to_string()];
                replies.extend((0..k).map(|_| wrap_reply(&broken_beta())));
                replies.push(wrap_reply(&beta_main()));
                let run = run_scripted_pipeline(
                    dir.path(),
                    &format!("k{k}"),
                    alpha_main(),
                    replies,
                    12,
                    &scripted_profile(),
                );
                assert_eq!(run.record.status, SessionStatus::Success, "k = {k}");
                assert_eq!(run.record.self_corr, k, "k = {k}");
                assert_eq!(
                    compile_results(&run.record).len(),
                    k as usize + 1,
                    "k = {k}"
                );
                assert_eq!(run.record.correction_prompt_count(), k as usize, "k = {k}");
                assert_eq!(run.consumed, k as usize + 3, "k = {k}");
                assert_eq!(run.remaining, 0, "k = {k}");
            }

            // Execution failure: compile-ok, exec-fail, compile-ok, exec-ok.
            let replies = vec![
                SUMMARY_REPLY.to_string(),
                DESCRIPTION_REPLY.to_string(),
                wrap_reply(EXEC_FAIL_BETA),
                wrap_reply(&beta_main()),
            ];
            let run = run_scripted_pipeline(
                dir.path(),
                "execfail",
                alpha_main(),
                replies,
                12,
                &scripted_profile(),
            );
            assert_eq!(run.record.status, SessionStatus::Success);
            assert_eq!(run.record.self_corr, 1);
            assert_eq!(run.record.attempts.len(), 2);
            let kinds_and_exits: Vec<(ToolKind, bool)> = run
                .record
                .attempts
                .iter()
                .flat_map(|a| a.results.iter())
                .map(|r| (r.kind, r.exit_ok))
                .collect();
            assert_eq!(
                kinds_and_exits,
                [
                    (ToolKind::Compile, true),
                    (ToolKind::Execute, false),
                    (ToolKind::Compile, true),
                    (ToolKind::Execute, true),
                ]
            );

            // Exhausted budget: the second failure is over budget, so no further
            // correction prompt is issued and the trap reply is never consumed.
            let replies = vec![
                SUMMARY_REPLY.to_string(),
                DESCRIPTION_REPLY.to_string(),
                wrap_reply(&broken_beta()),
                wrap_reply(&broken_beta()),
                "trap: this reply must never be requested".to_string(),
            ];
            let run = run_scripted_pipeline(
                dir.path(),
                "budget",
                alpha_main(),
                replies,
                1,
                &scripted_profile(),
            );
            assert_eq!(run.record.status, SessionStatus::CompileBudgetExceeded);
            assert_eq!(run.record.self_corr, 1);
            assert_eq!(run.consumed, 4);
            assert_eq!(run.remaining, 1);
        },
    );
}

// ---------------------------------------------------------------------------
// 4. Sim-T against an independent brute-force oracle
// ---------------------------------------------------------------------------

fn oracle_longest(a: &[String], b: &[String]) -> (usize, usize, usize) {
    let (mut best_i, mut best_j, mut best_n) = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut n = 0;
            while i + n < a.len() && j + n < b.len() && a[i + n] == b[j + n] {
                n += 1;
            }
            if n > best_n {
                (best_i, best_j, best_n) = (i, j, n);
            }
        }
    }
    (best_i, best_j, best_n)
}

fn oracle_matched(a: &[String], b: &[String]) -> usize {
    let (i, j, n) = oracle_longest(a, b);
    if n == 0 {
        return 0;
    }
    n + oracle_matched(&a[..i], &b[..j]) + oracle_matched(&a[i + n..], &b[j + n..])
}

fn oracle_ratio(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * oracle_matched(a, b) as f64 / (a.len() + b.len()) as f64
}

#[test]
fn criterion_4_sim_t_matches_oracle() {
    criterion(
        4,
        "sim_t equals the brute-force matching-block ratio on 1000 random pairs",
        || {
            assert_eq!(
                parashift::metrics::sim_t_tokens(
                    &["a".into(), "b".into(), "c".into()],
                    &["a".into(), "c".into()]
                ),
                0.8
            );
            assert_eq!(sim_t("a b c", "a c"), 0.8);

            let alphabet = ["int", "x", "=", ";", "{", "}", "for", "+"];
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut draw = |rng: &mut ChaCha8Rng| -> Vec<String> {
                let len = rng.gen_range(0..=20);
                (0..len)
                    .map(|_| (*alphabet.choose(rng).unwrap()).to_string())
                    .collect()
            };
            for case in 0..1000 {
                let a = draw(&mut rng);
                let b = draw(&mut rng);
                let got = parashift::metrics::sim_t_tokens(&a, &b);
                let want = oracle_ratio(&a, &b);
                assert!(
                    (0.0..=1.0).contains(&got),
                    "case {case}: {got} out of bounds"
                );
                assert_eq!(got, want, "case {case}: a = {a:?}, b = {b:?}");
            }
        },
    );
}

// ---------------------------------------------------------------------------
// 5. Sim-L properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_sim_l_properties() {
    criterion(
        5,
        "sim_l is permutation-invariant, symmetric, bounded, and right on hand cases",
        || {
            assert_eq!(sim_l("x\ny\nz", "x\nw"), 1.0 / 3.0);
            assert_eq!(sim_l("", ""), 1.0);

            let lines = [
                "int a = 1;",
                "int b = 2;",
                "return a + b;",
                "a += b;",
                "// note",
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for case in 0..200 {
                let n = rng.gen_range(1..=12);
                let picked: Vec<&str> = (0..n).map(|_| *lines.choose(&mut rng).unwrap()).collect();
                let mut shuffled = picked.clone();
                shuffled.shuffle(&mut rng);
                let a = picked.join("\n");
                let b = shuffled.join("\n");
                assert_eq!(sim_l(&a, &b), 1.0, "case {case}: permutation changed sim_l");

                let other: Vec<&str> = (0..rng.gen_range(1..=12))
                    .map(|_| *lines.choose(&mut rng).unwrap())
                    .collect();
                let c = other.join("\n");
                let forward = sim_l(&a, &c);
                assert_eq!(forward, sim_l(&c, &a), "case {case}: asymmetric");
                assert!(
                    (0.0..=1.0).contains(&forward),
                    "case {case}: {forward} out of bounds"
                );
            }
        },
    );
}

// ---------------------------------------------------------------------------
// 6. Default prompt dictionary goldens
// ---------------------------------------------------------------------------

const GOLDEN_GENERAL_SYSTEM: &str = "You are a professional coding AI assistant that specializes \
     in translating parallelized code between coding frameworks.";

const GOLDEN_O2C_SYSTEM: &str = "You are a professional coding AI assistant that specializes in \
     translating parallelized C++ code using OpenMP directives to the CUDA framework. Always \
     provide the complete and fully functional translated code without placeholders, comments, \
     or references suggesting that parts of the original code should be included. Ensure every \
     part of the translated code is explicitly written out. Surround your new generated code \
     with the three characters ```.";

const GOLDEN_C2O_SYSTEM: &str = "You are a professional coding AI assistant that specializes in \
     translating parallelized CUDA code to C++ code using OpenMP directives. Always provide the \
     complete and fully functional translated code without placeholders, comments, or references \
     suggesting that parts of the original code should be included. Ensure every part of the \
     translated code is explicitly written out. Surround your new generated code with the three \
     characters ```.";

const GOLDEN_O2C_TRANSLATE: &str = "Generate new code to refactor the following parallelized C++ \
     program written with OpenMP to instead use the CUDA framework. Provide the complete \
     translated CUDA code without any placeholders, comments, or references suggesting that \
     parts of the original code should be included. Every part of the translated code should be \
     explicitly written out. Avoid explanation of the code.";

const GOLDEN_C2O_TRANSLATE: &str = "Generate new code to refactor the following parallelized \
     CUDA program to instead use C++ code written with OpenMP directives. To enable GPU \
     offloading, use the 'omp pragma' directive 'target teams' for distributing 'for' loop \
     computations. Use static scheduling when needed and avoid dynamic scheduling. Provide the \
     complete translated C++ code without any placeholders, comments, or references suggesting \
     that parts of the original code should be included. Every part of the translated code \
     should be explicitly written out. Avoid explanation of the code.";

#[test]
fn criterion_6_prompt_goldens() {
    criterion(
        6,
        "default dictionary renders the canonical prompts byte for byte",
        || {
            let dict = PromptDictionary::default();
            let o2c = Direction::new("openmp", "cuda");
            let c2o = Direction::new("cuda", "openmp");

            assert_eq!(dict.general_system_prompt, GOLDEN_GENERAL_SYSTEM);
            assert_eq!(dict.system_prompt(&o2c).unwrap(), GOLDEN_O2C_SYSTEM);
            assert_eq!(dict.system_prompt(&c2o).unwrap(), GOLDEN_C2O_SYSTEM);
            assert_eq!(dict.translation_prompt(&o2c).unwrap(), GOLDEN_O2C_TRANSLATE);
            assert_eq!(dict.translation_prompt(&c2o).unwrap(), GOLDEN_C2O_TRANSLATE);

            let compile = dict.compile_error_prompt(
                "CODE",
                "nvcc -arch=sm_80 main.cu",
                "error: x",
                4_096,
                &ByteEstimator,
            );
            assert_eq!(
                compile,
                "CODE\n-- The above code was compiled with nvcc -arch=sm_80 main.cu and produced \
             the following compile error: error: x. Re-factor the above code with a fix to \
             eliminate the stated error."
            );
            let exec =
                dict.exec_error_prompt("CODE", "nvcc main.cu", "boom", 4_096, &ByteEstimator);
            assert_eq!(
            exec,
            "CODE\n-- The above code was executed after a successful compile with nvcc main.cu \
             and produced the following execution error: boom. Re-factor the above code with a \
             fix to eliminate the stated error."
        );

            for literal in [
            "You are a professional coding AI assistant",
            "Generate new code to refactor the following parallelized C++ program written with OpenMP",
            "Re-factor the above code with a fix to eliminate the stated error",
        ] {
            assert!(
                dict.general_system_prompt.contains(literal)
                    || dict.translation_prompt(&o2c).unwrap().contains(literal)
                    || compile.contains(literal),
                "missing literal: {literal}"
            );
        }
        },
    );
}

// ---------------------------------------------------------------------------
// 7. Context guard
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_context_guard() {
    criterion(
        7,
        "oversized prompts overflow before any backend call",
        || {
            let profile = LlmProfile {
                name: "small".to_string(),
                model_id: "small-16k".to_string(),
                context_length: 16_384,
                max_response_tokens: 4_096,
                temperature: 0.2,
            };

            // Direct request: the guard fires inside the client, before the
            // backend sees anything.
            let backend = ScriptedBackend::new(["trap: must never be consumed"]);
            let client = Client::new(&backend, &profile);
            let request = ChatRequest::new(None, "x".repeat(80_000), &profile);
            match client.complete(&request) {
                Err(BackendError::ContextOverflow {
                    estimated,
                    max_tokens,
                    context_length,
                }) => {
                    assert!(estimated + max_tokens > context_length);
                    assert_eq!(context_length, 16_384);
                }
                other => panic!("expected ContextOverflow, got {other:?}"),
            }
            assert_eq!(backend.consumed(), 0);
            assert_eq!(backend.remaining(), 1);

            // Prompt assembly pre-checks the same budget without any backend.
            let dict = PromptDictionary::from_toml_str(TEST_PROMPTS_TOML).unwrap();
            let err = assemble_translation_prompt(
                &dict,
                &Direction::new("alpha", "beta"),
                "reference text",
                "summary",
                "a description",
                &"y".repeat(60_000),
                &profile,
                &ByteEstimator,
            )
            .unwrap_err();
            assert!(
                matches!(
                    err,
                    PromptError::Backend(BackendError::ContextOverflow { .. })
                ),
                "expected overflow, got {err:?}"
            );

            // Through the pipeline: a compilable but enormous source overflows at
            // description time; the only consumed reply is the knowledge summary.
            let dir = tempfile::tempdir().unwrap();
            let huge_source = format!(
                "int main() {{ return 0; }}\n{}",
                "// padding\n".repeat(7_000)
            );
            let replies = vec![
                SUMMARY_REPLY.to_string(),
                "trap: must never be consumed".to_string(),
            ];
            let run =
                run_scripted_pipeline(dir.path(), "overflow", huge_source, replies, 3, &profile);
            assert_eq!(run.record.status, SessionStatus::ContextOverflow);
            assert_eq!(run.consumed, 1);
            assert_eq!(run.remaining, 1);
        },
    );
}

// ---------------------------------------------------------------------------
// Shared scaffolding for the CLI criteria
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_parashift"))
        .args(args)
        .output()
        .expect("binary launches");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

/// Serializes a reply book: one `[cell."app:src->tgt"]` table per cell.
fn script_toml(cells: &[(String, Vec<String>)]) -> String {
    let mut cell_table = toml::value::Table::new();
    for (key, replies) in cells {
        let mut entry = toml::value::Table::new();
        entry.insert(
            "replies".to_string(),
            toml::Value::Array(replies.iter().cloned().map(toml::Value::String).collect()),
        );
        cell_table.insert(key.clone(), toml::Value::Table(entry));
    }
    let mut root = toml::value::Table::new();
    root.insert("cell".to_string(), toml::Value::Table(cell_table));
    toml::to_string(&toml::Value::Table(root)).unwrap()
}

struct CliFixture {
    dir: tempfile::TempDir,
}

impl CliFixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn path_str(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, content: &str) {
        std::fs::write(self.path(name), content).unwrap();
    }
}

/// Lays out a complete config directory: sources, manifest, prompts, reply
/// book(s), and one config per reply book.
fn cli_fixture(
    apps: &[(&str, &str, &str)],
    scripts: &[(&str, Vec<(String, Vec<String>)>)],
) -> CliFixture {
    let fx = CliFixture {
        dir: tempfile::tempdir().unwrap(),
    };
    let mut entries = String::new();
    for (app, alpha_code, beta_code) in apps {
        fx.write(&format!("{app}_alpha.cpp"), alpha_code);
        fx.write(&format!("{app}_beta.cpp"), beta_code);
        entries.push_str(&format!(
            "\n[[entry]]\napp = \"{app}\"\ncategory = \"Math\"\nruntime_args = []\n\
             [entry.sources]\nalpha = \"{app}_alpha.cpp\"\nbeta = \"{app}_beta.cpp\"\n"
        ));
    }
    fx.write(
        "suite.toml",
        &format!("languages = [\"alpha\", \"beta\"]\n{entries}"),
    );
    fx.write("prompts.toml", TEST_PROMPTS_TOML);
    fx.write(
        "alpha.md",
        "alpha quick reference: C++17, printf output, one Total time line.\n",
    );
    fx.write(
        "beta.md",
        "beta quick reference: C++17, printf output, one Total time line.\n",
    );
    for (stem, cells) in scripts {
        fx.write(&format!("{stem}.toml"), &script_toml(cells));
        fx.write(
            &format!("config_{stem}.toml"),
            &format!(
                r#"[paths]
prompts = "prompts.toml"
manifest = "suite.toml"
output_dir = "out_{stem}"

[loop]
max_self_corr = 3
compile_timeout_s = 60.0
exec_timeout_s = 60.0
n_runtime_runs = 1

[language.alpha]
file_extension = "cpp"
compile_cmd = "g++ -O0 -std=c++17 {{src}} -o {{out}}"
run_cmd = "{{bin}} {{args}}"
knowledge_asset = "alpha.md"

[language.beta]
file_extension = "cpp"
compile_cmd = "g++ -O0 -std=c++17 {{src}} -o {{out}}"
run_cmd = "{{bin}} {{args}}"
knowledge_asset = "beta.md"

[llm.scripted]
model_id = "scripted-1"
context_length = 32768
max_response_tokens = 4096

[llm.scripted.backend]
kind = "scripted"
replies = "{stem}.toml"
"#
            ),
        );
    }
    fx
}

fn cell(app: &str, direction: &str, replies: Vec<String>) -> (String, Vec<String>) {
    (format!("{app}:{direction}"), replies)
}

fn files_under(root: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else {
            continue;
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.to_string_lossy().ends_with(suffix) {
                found.push(path);
            }
        }
    }
    found
}

// ---------------------------------------------------------------------------
// 8. End-to-end translation and baseline halt through the CLI
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_end_to_end_cli() {
    criterion(
        8,
        "translate self-corrects to success end to end; a broken baseline halts early",
        || {
            let fx = cli_fixture(
                &[("demo", &alpha_main(), &beta_main())],
                &[
                    (
                        "main",
                        vec![cell(
                            "demo",
                            "alpha->beta",
                            vec![
                                SUMMARY_REPLY.to_string(),
                                DESCRIPTION_REPLY.to_string(),
                                wrap_reply(&broken_beta()),
                                wrap_reply(&beta_main()),
                            ],
                        )],
                    ),
                    (
                        "budget",
                        vec![cell(
                            "demo",
                            "alpha->beta",
                            vec![
                                SUMMARY_REPLY.to_string(),
                                DESCRIPTION_REPLY.to_string(),
                                wrap_reply(&broken_beta()),
                                wrap_reply(&broken_beta()),
                            ],
                        )],
                    ),
                ],
            );

            let config = fx.path_str("config_main.toml");
            let (code, stdout, stderr) = run_cli(&[
                "translate",
                "--config",
                &config,
                "--app",
                "demo",
                "--direction",
                "alpha->beta",
                "--llm",
                "scripted",
            ]);
            assert_eq!(code, 0, "stdout:\n{stdout}\nstderr:\n{stderr}");
            assert!(stdout.contains("status: Success"), "{stdout}");
            assert!(stdout.contains("self_corr: 1"), "{stdout}");

            let artifacts = fx
                .path("out_main")
                .join("translate")
                .join("demo__scripted__alpha-to-beta");
            let session: SessionRecord = serde_json::from_str(
                &std::fs::read_to_string(
                    artifacts.join("demo__scripted__alpha-to-beta.session.json"),
                )
                .unwrap(),
            )
            .unwrap();
            assert_eq!(session.status, SessionStatus::Success);
            assert_eq!(session.self_corr, 1);

            let metadata: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(artifacts.join("demo__metadata.json")).unwrap(),
            )
            .unwrap();
            let generated_stdout = metadata["stdout"].as_str().unwrap();
            let baseline_stdout = session
                .baseline
                .as_ref()
                .and_then(|b| b.target_execute.as_ref())
                .map(|r| r.stdout.clone())
                .unwrap();
            assert!(generated_stdout.contains("sum 2001000"));
            assert!(
                compare_output(&baseline_stdout, generated_stdout, CompareMode::Filtered),
                "baseline:\n{baseline_stdout}\ngenerated:\n{generated_stdout}"
            );

            // Two broken replies against a budget of one: exit 3.
            let budget_config = fx.path_str("config_budget.toml");
            let (code, stdout, stderr) = run_cli(&[
                "translate",
                "--config",
                &budget_config,
                "--app",
                "demo",
                "--direction",
                "alpha->beta",
                "--llm",
                "scripted",
                "--max-self-corr",
                "1",
            ]);
            assert_eq!(code, 3, "stdout:\n{stdout}\nstderr:\n{stderr}");
            assert!(stdout.contains("status: CompileBudgetExceeded"), "{stdout}");

            // Baseline halt: corrupt the source, validate must fail fast with no
            // model artifacts of any kind.
            fx.write("demo_alpha.cpp", "this is not a C++ program\n");
            let (code, stdout, _stderr) = run_cli(&["validate", "--config", &config]);
            assert_eq!(code, 1, "{stdout}");
            assert!(stdout.contains("FAIL"), "{stdout}");
            let validate_root = fx.path("out_main").join("validate");
            assert!(files_under(&validate_root, ".session.json").is_empty());
            assert!(files_under(&validate_root, ".transcript.log").is_empty());
        },
    );
}

// ---------------------------------------------------------------------------
// 9. Scheduling determinism of the benchmark matrix
// ---------------------------------------------------------------------------

fn scrub_csv(text: &str) -> String {
    text.lines()
        .map(|line| {
            let mut cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 5 && cols[0] != "app" {
                cols[3] = "-";
                cols[4] = "-";
            }
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn scrub_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for key in ["runtime_generated_s", "runtime_source_s", "ratio"] {
                map.remove(key);
            }
            for nested in map.values_mut() {
                scrub_json(nested);
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(scrub_json),
        _ => {}
    }
}

fn scrub_md(text: &str) -> String {
    text.lines()
        .map(|line| {
            if line.starts_with('|') {
                let mut cells: Vec<String> = line.split('|').map(str::to_string).collect();
                if cells.len() >= 5 {
                    cells[2] = " - ".to_string();
                    cells[3] = " - ".to_string();
                }
                cells.join("|")
            } else {
                line.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_9_bench_determinism() {
    criterion(
        9,
        "bench reports are identical at workers=1 and workers=4 modulo wall time",
        || {
            let apps = [("vadd", 1_000u64), ("vmul", 3_000u64)];
            let program = |var: &str, n: u64| {
                cxx_sum_program(var)
                    .replace("2000ULL", &format!("{n}ULL"))
                    .replace(
                        "std::printf(\"n 2000\\n\");",
                        &format!("std::printf(\"n {n}\\n\");"),
                    )
            };
            let mut cells = Vec::new();
            let mut sources = Vec::new();
            for (app, n) in apps {
                let alpha = program("acc", n);
                let beta = program("total", n);
                cells.push(cell(
                    app,
                    "alpha->beta",
                    vec![
                        SUMMARY_REPLY.to_string(),
                        DESCRIPTION_REPLY.to_string(),
                        wrap_reply(&beta),
                    ],
                ));
                cells.push(cell(
                    app,
                    "beta->alpha",
                    vec![
                        SUMMARY_REPLY.to_string(),
                        DESCRIPTION_REPLY.to_string(),
                        wrap_reply(&alpha),
                    ],
                ));
                sources.push((app, alpha, beta));
            }
            let borrowed: Vec<(&str, &str, &str)> = sources
                .iter()
                .map(|(app, a, b)| (*app, a.as_str(), b.as_str()))
                .collect();
            let fx = cli_fixture(&borrowed, &[("bench", cells)]);

            let config = fx.path_str("config_bench.toml");
            let mut reports: Vec<BTreeMap<&str, String>> = Vec::new();
            for workers in ["1", "4"] {
                let out = fx.path_str(&format!("out_w{workers}"));
                let (code, stdout, stderr) = run_cli(&[
                    "bench",
                    "--config",
                    &config,
                    "--out",
                    &out,
                    "--workers",
                    workers,
                    "--runtime-threshold",
                    "0",
                ]);
                assert_eq!(code, 0, "stdout:\n{stdout}\nstderr:\n{stderr}");
                assert_eq!(
                    files_under(&fx.path(&format!("out_w{workers}")).join("rows"), ".json").len(),
                    4
                );
                let mut report = BTreeMap::new();
                for name in ["report.csv", "report.json", "report.md", "summary.txt"] {
                    report.insert(
                        name,
                        std::fs::read_to_string(fx.path(&format!("out_w{workers}")).join(name))
                            .unwrap(),
                    );
                }
                reports.push(report);
            }

            let (one, four) = (&reports[0], &reports[1]);
            assert_eq!(
                scrub_csv(&one["report.csv"]),
                scrub_csv(&four["report.csv"])
            );
            assert_eq!(scrub_md(&one["report.md"]), scrub_md(&four["report.md"]));
            assert_eq!(one["summary.txt"], four["summary.txt"]);
            let mut json_one: serde_json::Value =
                serde_json::from_str(&one["report.json"]).unwrap();
            let mut json_four: serde_json::Value =
                serde_json::from_str(&four["report.json"]).unwrap();
            scrub_json(&mut json_one);
            scrub_json(&mut json_four);
            assert_eq!(json_one, json_four);
            assert!(
                one["summary.txt"].contains("4/4 successful (100.0%)"),
                "{}",
                one["summary.txt"]
            );
        },
    );
}
