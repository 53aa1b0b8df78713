//! The three evaluation metrics on small, readable inputs.
//!
//! Sim-T is the token-level matching-block ratio, Sim-L the order-insensitive
//! line overlap, and the runtime ratio compares the reference implementation
//! against the generated one (>1 means the generated code is faster). Output
//! comparison ignores timing lines and tolerates float noise.
//!
//!     cargo run --example similarity_metrics

use parashift::prelude::*;

const REFERENCE: &str = "\
int main() {
    float acc = 0.0f;
    for (int i = 0; i < n; ++i) {
        acc += x[i] * y[i];
    }
    printf(\"dot %f\\n\", acc);
}";

const RENAMED: &str = "\
int main() {
    float total = 0.0f;
    for (int i = 0; i < n; ++i) {
        total += x[i] * y[i];
    }
    printf(\"dot %f\\n\", total);
}";

const REORDERED: &str = "\
for (int i = 0; i < n; ++i) {
    acc += x[i] * y[i];
}
int main() {
    float acc = 0.0f;
    printf(\"dot %f\\n\", acc);
}";

fn main() {
    println!("tokenize_code(\"acc += x[i] * 3.14f;\")");
    println!("  -> {:?}\n", tokenize_code("acc += x[i] * 3.14f;"));

    println!("similarity against the reference implementation:");
    for (label, candidate) in [
        ("identical", REFERENCE),
        ("renamed variable", RENAMED),
        ("lines reordered", REORDERED),
    ] {
        println!(
            "  {label:<18} sim_t = {:.4}   sim_l = {:.4}",
            sim_t(REFERENCE, candidate),
            sim_l(REFERENCE, candidate)
        );
    }

    println!("\nruntime ratios (reference seconds / generated seconds):");
    for (source, generated) in [(1.2440, 1.2039), (0.0140, 0.0045), (2.0, 4.0)] {
        let ratio = runtime_ratio(source, generated).unwrap();
        let verdict = if ratio >= 1.0 {
            "generated is faster"
        } else {
            "generated is slower"
        };
        println!(
            "  {source:>8.4} / {generated:>8.4} = {:>8}  ({verdict})",
            render4(ratio)
        );
    }

    println!("\noutput comparison:");
    let reference = "n 1000\ndot 249.999985\nTotal time: 0.847 s\n";
    let generated = "n 1000\ndot 250.000000\nTotal time: 0.012 s\n";
    println!("  reference: {reference:?}");
    println!("  generated: {generated:?}");
    println!(
        "  exact:    {}",
        compare_output(reference, generated, CompareMode::Exact)
    );
    println!(
        "  filtered: {}",
        compare_output(reference, generated, CompareMode::Filtered)
    );
    println!("  (filtered drops the timing lines and allows 1e-6 relative float tolerance)");
}
