//! Code extraction across the response shapes models actually produce.
//!
//! Fenced blocks win and the longest one is taken; an unclosed fence runs to
//! the end of the response; indented fences still count; a fenceless reply is
//! accepted only when it looks like code line by line.
//!
//!     cargo run --example extract_blocks

use parashift::prelude::*;

fn show(label: &str, response: &str) {
    println!("--- {label} ---");
    match extract_code(response) {
        Ok(ExtractedCode {
            code,
            language_tag,
            block_index,
            total_blocks,
        }) => {
            if total_blocks > 0 {
                let tag = language_tag.as_deref().unwrap_or("untagged");
                println!(
                    "extracted block {} of {total_blocks} ({tag}, {} bytes):",
                    block_index + 1,
                    code.len()
                );
            } else {
                println!("extracted via fenceless heuristic ({} bytes):", code.len());
            }
            for line in code.lines() {
                println!("    {line}");
            }
        }
        Err(e) => println!("no code: {e}"),
    }
    println!();
}

fn main() {
    show(
        "prose around one fenced block",
        "Here is the translated program:\n\
         ```cpp\nint main() { return 0; }\n```\n\
         Let me know if you need adjustments.",
    );

    show(
        "two blocks, longest wins",
        "A helper first:\n```\nint helper();\n```\n\
         And the full program:\n```\nint helper() { return 7; }\nint main() { return helper(); }\n```",
    );

    show(
        "unclosed fence extends to the end",
        "```cuda\n__global__ void k() {}\nint main() { k<<<1, 1>>>(); }",
    );

    show(
        "indented fence inside a list item",
        "1. Replace the kernel:\n   ```\n   void kernel_stub() {}\n   ```",
    );

    show(
        "fenceless but code-shaped",
        "#include <cstdio>\nint main() {\n    std::printf(\"hi\\n\");\n    return 0;\n}",
    );

    show(
        "plain prose, correctly rejected",
        "The program needs a main function and a loop.",
    );
}
