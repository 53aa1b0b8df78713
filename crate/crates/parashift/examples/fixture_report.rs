//! Summary statistics and reports over the bundled result fixtures.
//!
//! The crate ships reference result tables for ten benchmark apps translated
//! in both directions by four models, plus the measured runtimes of the
//! reference implementations. This renders the headline numbers and a
//! markdown report slice from those tables — no compiler, no model.
//!
//!     cargo run --example fixture_report

use parashift::bench::{fixtures, DEFAULT_RUNTIME_THRESHOLD, DEFAULT_SIM_THRESHOLD};
use parashift::prelude::*;

fn main() {
    let o2c = Direction::new("openmp", "cuda");
    let c2o = Direction::new("cuda", "openmp");

    println!("reference runtimes (seconds):");
    for runtime in fixtures::source_runtimes() {
        let mut langs: Vec<String> = runtime
            .runtime_s
            .iter()
            .map(|(lang, s)| format!("{lang} {s:.4}"))
            .collect();
        langs.sort();
        println!(
            "  {:<16} {:<44} {}",
            runtime.app,
            runtime.category,
            langs.join("   ")
        );
    }

    for (direction, rows) in [
        (
            &o2c,
            fixtures::result_rows(&o2c, &fixtures::openmp_to_cuda()),
        ),
        (
            &c2o,
            fixtures::result_rows(&c2o, &fixtures::cuda_to_openmp()),
        ),
    ] {
        let stats = summarize(
            &rows,
            DEFAULT_RUNTIME_THRESHOLD,
            DEFAULT_SIM_THRESHOLD,
            SimMetric::Token,
        );
        println!();
        print!(
            "{}",
            parashift::bench::render_summary(&direction.to_string(), &stats)
        );
    }

    println!("\nmarkdown report (first table):");
    let rows = fixtures::result_rows(&o2c, &fixtures::openmp_to_cuda());
    let markdown = render_report(&rows, ReportFormat::Markdown);
    let first_table: Vec<&str> = markdown
        .lines()
        .take_while(|l| !l.starts_with("## ") || l.contains("GPT-4"))
        .collect();
    for line in first_table {
        println!("{line}");
    }

    println!("\ncsv report (first rows):");
    for line in render_report(&rows, ReportFormat::Csv).lines().take(6) {
        println!("{line}");
    }
}
