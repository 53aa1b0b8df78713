//! Every prompt the default dictionary renders, on one screen.
//!
//! Nothing here talks to a model or a compiler: this is the exact text the
//! pipeline would send, for both built-in directions, including a fully
//! assembled four-part translation prompt and both correction prompts.
//!
//!     cargo run --example prompt_gallery

use parashift::prelude::*;

fn heading(title: &str) {
    println!("\n=== {title} ===");
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dict = PromptDictionary::default();
    let profile = LlmProfile {
        name: "gallery".to_string(),
        model_id: "gallery-1".to_string(),
        context_length: 32_768,
        max_response_tokens: 4_096,
        temperature: 0.2,
    };

    heading("general system prompt");
    println!("{}", dict.general_system_prompt);

    for (source, target) in [("openmp", "cuda"), ("cuda", "openmp")] {
        let direction = Direction::new(source, target);
        heading(&format!("system prompt ({direction})"));
        println!("{}", dict.system_prompt(&direction)?);
        heading(&format!("translation instruction ({direction})"));
        println!("{}", dict.translation_prompt(&direction)?);
    }

    heading("assembled translation prompt (openmp->cuda, toy inputs)");
    let bundle = assemble_translation_prompt(
        &dict,
        &Direction::new("openmp", "cuda"),
        "CUDA quick notes: kernels launch as <<<blocks, threads>>>; copy with cudaMemcpy.",
        "CUDA code runs kernels over a grid of threads and copies data between host and device.",
        "a SAXPY loop over one million elements, parallelized with an OpenMP target directive",
        "#pragma omp target teams distribute parallel for\nfor (int i = 0; i < n; ++i) y[i] = a * x[i] + y[i];",
        &profile,
        &ByteEstimator,
    )?;
    println!("[system]\n{}\n", bundle.system_prompt);
    println!(
        "[user, ~{} tokens estimated]\n{}",
        bundle.token_estimate, bundle.user_prompt
    );

    heading("compile correction prompt");
    println!(
        "{}",
        dict.compile_error_prompt(
            "__global__ void saxpy(int n, float a, float *x, float *y) { /* ... */ }",
            "nvcc -arch=sm_80 saxpy.cu -o saxpy.bin",
            "saxpy.cu(12): error: identifier \"blockIdx\" is undefined",
            1_024,
            &ByteEstimator,
        )
    );

    heading("execution correction prompt");
    println!(
        "{}",
        dict.exec_error_prompt(
            "__global__ void saxpy(int n, float a, float *x, float *y) { /* ... */ }",
            "nvcc -arch=sm_80 saxpy.cu -o saxpy.bin",
            "CUDA error: an illegal memory access was encountered",
            1_024,
            &ByteEstimator,
        )
    );

    heading("stderr truncation (tail survives)");
    let noisy = (0..400)
        .map(|i| format!("warning {i}: noise"))
        .collect::<Vec<_>>()
        .join("\n");
    let truncated = parashift::prompt::truncate_stderr(&noisy, 32, &ByteEstimator);
    println!("{truncated}");
    Ok(())
}
