//! Compiling, executing, and timing candidate programs. No shell is ever
//! involved: command templates are rendered to explicit argv vectors, and
//! every artifact stays inside the session working directory.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use crate::domain::{BaselineRecord, LanguageSpec, ToolKind, ToolResult, TranslationTask};

pub const DEFAULT_COMPILE_TIMEOUT_S: f64 = 120.0;
pub const DEFAULT_EXEC_TIMEOUT_S: f64 = 300.0;
pub const DEFAULT_RUNTIME_RUNS: usize = 3;
pub const DEFAULT_RESOURCE_LOCK: &str = "accelerator";

#[derive(Debug, thiserror::Error)]
pub enum ToolchainError {
    #[error("toolchain program `{program}` not found; install it or fix the language spec")]
    ToolchainMissing { program: String },
    #[error("command template rendered to an empty argv")]
    EmptyCommand,
    #[error("runtime measurement needs n_runs >= 1")]
    ZeroRuns,
    #[error("runtime measurement run {run_index} failed (exit_ok=false, timed_out={timed_out})")]
    RunFailed {
        run_index: usize,
        timed_out: bool,
        result: Box<ToolResult>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Renders a whitespace-separated command template into argv. `{args}` as a
/// standalone token splices the runtime argument list; other placeholders are
/// substituted within their token.
pub fn render_argv(template: &str, substitutions: &[(&str, &str)], args: &[String]) -> Vec<String> {
    let mut argv = Vec::new();
    for token in template.split_whitespace() {
        if token == "{args}" {
            argv.extend(args.iter().cloned());
            continue;
        }
        let mut rendered = token.to_string();
        if rendered.contains("{args}") {
            rendered = rendered.replace("{args}", &args.join(" "));
        }
        for (placeholder, value) in substitutions {
            rendered = rendered.replace(placeholder, value);
        }
        argv.push(rendered);
    }
    argv
}

struct RawRun {
    exit_ok: bool,
    stdout: String,
    stderr: String,
    wall_time_s: f64,
    timed_out: bool,
}

#[cfg(unix)]
fn kill_process_group(pid: u32) {
    unsafe {
        libc::killpg(pid as i32, libc::SIGKILL);
    }
}

/// Runs argv directly with a hard wall-clock deadline. On timeout the whole
/// process group is killed so pipe readers cannot hang on grandchildren.
fn run_with_timeout(
    argv: &[String],
    env: &BTreeMap<String, String>,
    cwd: &Path,
    timeout: Duration,
) -> Result<RawRun, ToolchainError> {
    let (program, args) = argv.split_first().ok_or(ToolchainError::EmptyCommand)?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (key, value) in env {
        cmd.env(key, value);
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }

    let start = Instant::now();
    let mut child = cmd.spawn().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ToolchainError::ToolchainMissing {
                program: program.clone(),
            }
        } else {
            ToolchainError::Io(e)
        }
    })?;

    let mut stdout_pipe = child.stdout.take().expect("stdout piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let stdout_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout_pipe.read_to_end(&mut buf);
        buf
    });
    let stderr_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        buf
    });

    let deadline = start + timeout;
    let mut timed_out = false;
    let mut exit_ok = false;
    loop {
        match child.try_wait()? {
            Some(status) => {
                exit_ok = status.success();
                break;
            }
            None => {
                if Instant::now() >= deadline {
                    timed_out = true;
                    #[cfg(unix)]
                    kill_process_group(child.id());
                    let _ = child.kill();
                    let _ = child.wait();
                    break;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
        }
    }
    let wall_time_s = start.elapsed().as_secs_f64();
    let stdout = String::from_utf8_lossy(&stdout_reader.join().unwrap_or_default()).into_owned();
    let stderr = String::from_utf8_lossy(&stderr_reader.join().unwrap_or_default()).into_owned();
    Ok(RawRun {
        exit_ok,
        stdout,
        stderr,
        wall_time_s,
        timed_out,
    })
}

/// A finished compile: the outcome plus where the binary was (or would have
/// been) written, and the exact command line for prompt framing.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub result: ToolResult,
    pub binary_path: PathBuf,
    pub command_line: String,
}

/// Child processes run with their own working directory, so every path that
/// lands on a command line must survive the change.
fn absolutize(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}

/// Compiles `code_path` with the spec's compiler into `workdir`. Nonzero
/// compiler exit is data in the returned [`ToolResult`]; only a missing
/// compiler or I/O trouble raises.
pub fn compile(
    code_path: &Path,
    spec: &LanguageSpec,
    workdir: &Path,
) -> Result<Compiled, ToolchainError> {
    compile_with_timeout(code_path, spec, workdir, DEFAULT_COMPILE_TIMEOUT_S)
}

/// Same as [`compile`] with an explicit timeout.
pub fn compile_with_timeout(
    code_path: &Path,
    spec: &LanguageSpec,
    workdir: &Path,
    timeout_s: f64,
) -> Result<Compiled, ToolchainError> {
    let code_path = absolutize(code_path);
    let workdir = absolutize(workdir);
    let stem = code_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "candidate".to_string());
    let binary_path = workdir.join(format!("{stem}.bin"));
    let src = code_path.to_string_lossy();
    let out = binary_path.to_string_lossy();
    let argv = render_argv(&spec.compile_cmd, &[("{src}", &src), ("{out}", &out)], &[]);
    let command_line = argv.join(" ");
    let raw = run_with_timeout(&argv, &spec.env, &workdir, secs(timeout_s))?;
    Ok(Compiled {
        result: ToolResult::new(
            ToolKind::Compile,
            raw.exit_ok,
            raw.stdout,
            raw.stderr,
            raw.wall_time_s,
            raw.timed_out,
        ),
        binary_path,
        command_line,
    })
}

fn secs(s: f64) -> Duration {
    Duration::from_secs_f64(s.max(0.0))
}

/// Runs a compiled binary through the spec's run template with a wall-clock
/// deadline. The execute permission is set here.
pub fn execute(
    binary_path: &Path,
    spec: &LanguageSpec,
    args: &[String],
    timeout_s: f64,
) -> Result<ToolResult, ToolchainError> {
    let binary_path = absolutize(binary_path);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        if let Ok(meta) = std::fs::metadata(&binary_path) {
            let mut perms = meta.permissions();
            perms.set_mode(perms.mode() | 0o755);
            let _ = std::fs::set_permissions(&binary_path, perms);
        }
    }
    let bin = binary_path.to_string_lossy();
    let argv = render_argv(&spec.run_cmd, &[("{bin}", &bin)], args);
    let cwd = binary_path.parent().unwrap_or(Path::new("."));
    let raw = run_with_timeout(&argv, &spec.env, cwd, secs(timeout_s))?;
    Ok(ToolResult::new(
        ToolKind::Execute,
        raw.exit_ok,
        raw.stdout,
        raw.stderr,
        raw.wall_time_s,
        raw.timed_out,
    ))
}

static RESOURCE_LOCKS: OnceLock<Mutex<HashMap<String, Arc<Mutex<()>>>>> = OnceLock::new();

/// Named mutual-exclusion token. Runtime measurements take one so timing runs
/// never share the accelerator (or, desk-scale, the CPU) with each other.
pub fn resource_lock(name: &str) -> Arc<Mutex<()>> {
    let registry = RESOURCE_LOCKS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = registry.lock().unwrap_or_else(|p| p.into_inner());
    map.entry(name.to_string())
        .or_insert_with(|| Arc::new(Mutex::new(())))
        .clone()
}

/// Mean wall time over `n_runs` executions, all of which must succeed. Runs
/// are serialized under `lock_name` when given.
pub fn measure_runtime(
    binary_path: &Path,
    spec: &LanguageSpec,
    args: &[String],
    n_runs: usize,
    timeout_s: f64,
    lock_name: Option<&str>,
) -> Result<f64, ToolchainError> {
    if n_runs == 0 {
        return Err(ToolchainError::ZeroRuns);
    }
    let lock = lock_name.map(resource_lock);
    let _guard = lock
        .as_ref()
        .map(|l| l.lock().unwrap_or_else(|p| p.into_inner()));
    let mut total = 0.0;
    for run_index in 0..n_runs {
        let result = execute(binary_path, spec, args, timeout_s)?;
        if !result.exit_ok {
            return Err(ToolchainError::RunFailed {
                run_index,
                timed_out: result.timed_out,
                result: Box::new(result),
            });
        }
        total += result.wall_time_s;
    }
    Ok(total / n_runs as f64)
}

/// Where a baseline check gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineStage {
    SourceCompile,
    SourceExecute,
    TargetCompile,
    TargetExecute,
}

impl std::fmt::Display for BaselineStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BaselineStage::SourceCompile => "source compile",
            BaselineStage::SourceExecute => "source execute",
            BaselineStage::TargetCompile => "target compile",
            BaselineStage::TargetExecute => "target execute",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineOutcome {
    Ok(BaselineRecord),
    Failed {
        stage: BaselineStage,
        record: BaselineRecord,
    },
}

/// Settings shared by baseline validation and the correction loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    pub compile_timeout_s: f64,
    pub exec_timeout_s: f64,
    pub n_runtime_runs: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            compile_timeout_s: DEFAULT_COMPILE_TIMEOUT_S,
            exec_timeout_s: DEFAULT_EXEC_TIMEOUT_S,
            n_runtime_runs: DEFAULT_RUNTIME_RUNS,
        }
    }
}

/// Proves the task is viable before any model call: the source must compile
/// and run; with a reference target present, it must too, and its stdout and
/// mean runtime are captured for later comparison.
pub fn validate_baseline(
    task: &TranslationTask,
    source_spec: &LanguageSpec,
    target_spec: &LanguageSpec,
    workdir: &Path,
    limits: &RunLimits,
    lock_name: Option<&str>,
) -> Result<BaselineOutcome, ToolchainError> {
    std::fs::create_dir_all(workdir)?;
    let mut record = BaselineRecord::default();

    let source_path = workdir.join(format!(
        "{}__baseline_source.{}",
        task.app_name, source_spec.file_extension
    ));
    std::fs::write(&source_path, &task.source_code)?;
    let compiled =
        compile_with_timeout(&source_path, source_spec, workdir, limits.compile_timeout_s)?;
    let compile_ok = compiled.result.exit_ok;
    record.source_compile = Some(compiled.result);
    if !compile_ok {
        return Ok(BaselineOutcome::Failed {
            stage: BaselineStage::SourceCompile,
            record,
        });
    }
    let executed = execute(
        &compiled.binary_path,
        source_spec,
        &task.runtime_args,
        limits.exec_timeout_s,
    )?;
    let exec_ok = executed.exit_ok;
    record.source_execute = Some(executed);
    if !exec_ok {
        return Ok(BaselineOutcome::Failed {
            stage: BaselineStage::SourceExecute,
            record,
        });
    }

    if let Some(reference) = &task.reference_target_code {
        let target_path = workdir.join(format!(
            "{}__baseline_target.{}",
            task.app_name, target_spec.file_extension
        ));
        std::fs::write(&target_path, reference)?;
        let compiled =
            compile_with_timeout(&target_path, target_spec, workdir, limits.compile_timeout_s)?;
        let compile_ok = compiled.result.exit_ok;
        record.target_compile = Some(compiled.result.clone());
        if !compile_ok {
            return Ok(BaselineOutcome::Failed {
                stage: BaselineStage::TargetCompile,
                record,
            });
        }
        let executed = execute(
            &compiled.binary_path,
            target_spec,
            &task.runtime_args,
            limits.exec_timeout_s,
        )?;
        let exec_ok = executed.exit_ok;
        let wall = executed.wall_time_s;
        record.target_stdout = Some(executed.stdout.clone());
        record.target_execute = Some(executed);
        if !exec_ok {
            return Ok(BaselineOutcome::Failed {
                stage: BaselineStage::TargetExecute,
                record,
            });
        }
        record.target_runtime_s = Some(
            match measure_runtime(
                &compiled.binary_path,
                target_spec,
                &task.runtime_args,
                limits.n_runtime_runs,
                limits.exec_timeout_s,
                lock_name,
            ) {
                Ok(mean) => mean,
                // The binary just ran fine once; a flaky timing run falls
                // back to that observed wall time rather than failing the
                // whole baseline.
                Err(ToolchainError::RunFailed { .. }) => wall,
                Err(other) => return Err(other),
            },
        );
    }

    Ok(BaselineOutcome::Ok(record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Direction;

    fn cxx_spec() -> LanguageSpec {
        LanguageSpec::new("cxx", "cpp", "g++ -O1 {src} -o {out}", "{bin} {args}")
    }

    fn sh_spec() -> LanguageSpec {
        LanguageSpec::new("sh", "sh", "cp {src} {out}", "{bin} {args}")
    }

    fn write_script(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        path
    }

    #[test]
    fn render_argv_substitutes_and_splices() {
        let argv = render_argv(
            "g++ -O3 {src} -o {out}",
            &[("{src}", "/w/a.cpp"), ("{out}", "/w/a.bin")],
            &[],
        );
        assert_eq!(argv, ["g++", "-O3", "/w/a.cpp", "-o", "/w/a.bin"]);
        let argv = render_argv(
            "{bin} {args}",
            &[("{bin}", "/w/a.bin")],
            &["10000".to_string(), "1".to_string()],
        );
        assert_eq!(argv, ["/w/a.bin", "10000", "1"]);
        let argv = render_argv("{bin} {args}", &[("{bin}", "/w/a.bin")], &[]);
        assert_eq!(argv, ["/w/a.bin"]);
    }

    #[test]
    fn compile_and_execute_hello_world() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("hello.cpp");
        std::fs::write(
            &src,
            "#include <cstdio>\nint main() { printf(\"hello\\n\"); return 0; }\n",
        )
        .unwrap();
        let compiled = compile(&src, &cxx_spec(), dir.path()).unwrap();
        assert!(compiled.result.exit_ok);
        assert_eq!(compiled.result.kind, ToolKind::Compile);
        assert!(
            compiled.binary_path.starts_with(dir.path()),
            "artifacts stay in workdir"
        );
        assert!(compiled.binary_path.exists());
        assert!(compiled.command_line.starts_with("g++ -O1"));
        let run = execute(&compiled.binary_path, &cxx_spec(), &[], 10.0).unwrap();
        assert!(run.exit_ok);
        assert_eq!(run.stdout, "hello\n");
        assert_eq!(run.kind, ToolKind::Execute);
    }

    #[test]
    fn compile_error_is_data_not_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("broken.cpp");
        std::fs::write(&src, "int main() { return undeclared_identifier; }\n").unwrap();
        let compiled = compile(&src, &cxx_spec(), dir.path()).unwrap();
        assert!(!compiled.result.exit_ok);
        assert!(compiled.result.stderr.contains("undeclared_identifier"));
        assert!(!compiled.result.timed_out);
    }

    #[test]
    fn missing_compiler_is_a_distinct_halt() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("x.cpp");
        std::fs::write(&src, "int main() { return 0; }\n").unwrap();
        let mut spec = cxx_spec();
        spec.compile_cmd = "definitely-not-a-compiler-7f3a {src} -o {out}".to_string();
        let err = compile(&src, &spec, dir.path()).unwrap_err();
        match err {
            ToolchainError::ToolchainMissing { program } => {
                assert_eq!(program, "definitely-not-a-compiler-7f3a");
            }
            other => panic!("expected ToolchainMissing, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_exit_and_exit_code_capture() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path(), "fail.sh", "echo oops >&2\nexit 3");
        let run = execute(&script, &sh_spec(), &[], 10.0).unwrap();
        assert!(!run.exit_ok);
        assert_eq!(run.stderr, "oops\n");
        assert!(!run.timed_out);
    }

    #[test]
    fn timeout_kills_and_marks() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path(), "spin.sh", "sleep 30");
        let started = Instant::now();
        let run = execute(&script, &sh_spec(), &[], 1.0).unwrap();
        let elapsed = started.elapsed().as_secs_f64();
        assert!(run.timed_out);
        assert!(!run.exit_ok);
        assert!(
            (run.wall_time_s - 1.0).abs() < 0.5,
            "wall {}",
            run.wall_time_s
        );
        assert!(
            elapsed < 5.0,
            "group kill must not wait for grandchildren ({elapsed}s)"
        );
    }

    #[test]
    fn measure_runtime_means_over_runs() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path(), "sleepy.sh", "sleep 0.1");
        let mean = measure_runtime(&script, &sh_spec(), &[], 3, 10.0, Some("test-lock")).unwrap();
        assert!((0.08..0.3).contains(&mean), "mean {mean}");
    }

    #[test]
    fn measure_runtime_rejects_flaky_binaries() {
        let dir = tempfile::tempdir().unwrap();
        // Fails on the second run: a marker file flips the behavior.
        let marker = dir.path().join("ran_once");
        let body = format!(
            "if [ -e {m} ]; then exit 1; else touch {m}; fi",
            m = marker.display()
        );
        let script = write_script(dir.path(), "flaky.sh", &body);
        let err = measure_runtime(&script, &sh_spec(), &[], 3, 10.0, None).unwrap_err();
        match err {
            ToolchainError::RunFailed { run_index, .. } => assert_eq!(run_index, 1),
            other => panic!("expected RunFailed, got {other:?}"),
        }
    }

    #[test]
    fn measure_runtime_needs_at_least_one_run() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path(), "ok.sh", "exit 0");
        assert!(matches!(
            measure_runtime(&script, &sh_spec(), &[], 0, 10.0, None),
            Err(ToolchainError::ZeroRuns)
        ));
    }

    #[test]
    fn args_reach_the_program() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path(), "echoer.sh", "echo \"$1-$2\"");
        let run = execute(
            &script,
            &sh_spec(),
            &["10000".to_string(), "1".to_string()],
            10.0,
        )
        .unwrap();
        assert_eq!(run.stdout, "10000-1\n");
    }

    fn demo_task(source_ok: bool, target_ok: bool) -> TranslationTask {
        let good = "#include <cstdio>\nint main() { printf(\"v 42\\n\"); return 0; }\n";
        let bad = "int main() { return nope; }\n";
        TranslationTask {
            app_name: "demo".to_string(),
            direction: Direction::new("cxx", "cxx"),
            source_code: (if source_ok { good } else { bad }).to_string(),
            reference_target_code: Some((if target_ok { good } else { bad }).to_string()),
            runtime_args: vec![],
        }
    }

    #[test]
    fn baseline_captures_target_stdout_and_runtime() {
        let dir = tempfile::tempdir().unwrap();
        let limits = RunLimits {
            compile_timeout_s: 60.0,
            exec_timeout_s: 10.0,
            n_runtime_runs: 2,
        };
        let outcome = validate_baseline(
            &demo_task(true, true),
            &cxx_spec(),
            &cxx_spec(),
            dir.path(),
            &limits,
            None,
        )
        .unwrap();
        match outcome {
            BaselineOutcome::Ok(record) => {
                assert!(record.source_compile.unwrap().exit_ok);
                assert!(record.source_execute.unwrap().exit_ok);
                assert_eq!(record.target_stdout.as_deref(), Some("v 42\n"));
                assert!(record.target_runtime_s.unwrap() > 0.0);
            }
            BaselineOutcome::Failed { stage, .. } => panic!("baseline failed at {stage}"),
        }
    }

    #[test]
    fn baseline_stops_at_broken_source() {
        let dir = tempfile::tempdir().unwrap();
        let limits = RunLimits {
            compile_timeout_s: 60.0,
            exec_timeout_s: 10.0,
            n_runtime_runs: 1,
        };
        let outcome = validate_baseline(
            &demo_task(false, true),
            &cxx_spec(),
            &cxx_spec(),
            dir.path(),
            &limits,
            None,
        )
        .unwrap();
        match outcome {
            BaselineOutcome::Failed { stage, record } => {
                assert_eq!(stage, BaselineStage::SourceCompile);
                assert!(!record.source_compile.unwrap().exit_ok);
                assert!(
                    record.target_compile.is_none(),
                    "target half must be skipped"
                );
            }
            BaselineOutcome::Ok(_) => panic!("broken source must fail the baseline"),
        }
    }

    #[test]
    fn baseline_reports_broken_target() {
        let dir = tempfile::tempdir().unwrap();
        let limits = RunLimits {
            compile_timeout_s: 60.0,
            exec_timeout_s: 10.0,
            n_runtime_runs: 1,
        };
        let outcome = validate_baseline(
            &demo_task(true, false),
            &cxx_spec(),
            &cxx_spec(),
            dir.path(),
            &limits,
            None,
        )
        .unwrap();
        match outcome {
            BaselineOutcome::Failed { stage, record } => {
                assert_eq!(stage, BaselineStage::TargetCompile);
                assert!(record.source_execute.unwrap().exit_ok);
            }
            BaselineOutcome::Ok(_) => panic!("broken target must fail the baseline"),
        }
    }

    #[test]
    fn source_only_task_skips_target_half() {
        let dir = tempfile::tempdir().unwrap();
        let mut task = demo_task(true, true);
        task.reference_target_code = None;
        let limits = RunLimits {
            compile_timeout_s: 60.0,
            exec_timeout_s: 10.0,
            n_runtime_runs: 1,
        };
        let outcome =
            validate_baseline(&task, &cxx_spec(), &cxx_spec(), dir.path(), &limits, None).unwrap();
        match outcome {
            BaselineOutcome::Ok(record) => {
                assert!(record.target_compile.is_none());
                assert!(record.target_stdout.is_none());
                assert!(record.target_runtime_s.is_none());
            }
            BaselineOutcome::Failed { stage, .. } => panic!("unexpected failure at {stage}"),
        }
    }
}
