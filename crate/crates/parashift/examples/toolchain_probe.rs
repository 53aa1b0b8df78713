//! Compile, run, and time a program through a language spec.
//!
//! A `LanguageSpec` is just command templates: `{src}`/`{out}` for the
//! compiler, `{bin} {args}` for the runner. This probe writes a small C++
//! program, builds it with the host g++, executes it with arguments, and
//! takes a mean runtime over several measured runs.
//!
//!     cargo run --example toolchain_probe

use std::collections::BTreeMap;
use std::error::Error;

use parashift::prelude::*;

const PROGRAM: &str = r#"#include <cstdio>
#include <cstdlib>

int main(int argc, char **argv) {
    long n = argc > 1 ? std::strtol(argv[1], nullptr, 10) : 1000;
    double sum = 0.0;
    for (long i = 1; i <= n; ++i) {
        sum += 1.0 / double(i * i);
    }
    std::printf("n %ld\n", n);
    std::printf("basel %.9f\n", sum);
    return 0;
}
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let spec = LanguageSpec {
        name: "cxx".to_string(),
        file_extension: "cpp".to_string(),
        compile_cmd: "g++ -O2 -std=c++17 {src} -o {out}".to_string(),
        run_cmd: "{bin} {args}".to_string(),
        knowledge_asset: None,
        env: BTreeMap::new(),
    };
    validate_language_spec(&spec)?;

    let code_path = dir.path().join("basel.cpp");
    std::fs::write(&code_path, PROGRAM)?;

    let compiled = compile(&code_path, &spec, dir.path())?;
    println!("compile: {}", compiled.command_line);
    println!("  exit_ok    = {}", compiled.result.exit_ok);
    println!("  wall_time  = {:.3} s", compiled.result.wall_time_s);
    println!("  binary     = {}", compiled.binary_path.display());
    if !compiled.result.exit_ok {
        println!("  stderr:\n{}", compiled.result.stderr);
        return Err("compilation failed".into());
    }

    let args = vec!["2000000".to_string()];
    let run = execute(&compiled.binary_path, &spec, &args, 30.0)?;
    println!(
        "\nexecute: {} {}",
        compiled.binary_path.display(),
        args.join(" ")
    );
    println!("  exit_ok    = {}", run.exit_ok);
    println!("  wall_time  = {:.4} s", run.wall_time_s);
    print!("  stdout:\n{}", indent(&run.stdout));

    let mean = measure_runtime(&compiled.binary_path, &spec, &args, 5, 30.0, None)?;
    println!("\nmeasured runtime: {mean:.4} s (mean of 5 runs)");
    Ok(())
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("    {l}\n")).collect()
}
