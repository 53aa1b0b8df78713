//! Evaluation metrics: token- and line-level code similarity, runtime ratio,
//! and stdout comparison with a timing-line filter.

use std::collections::HashMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("generated runtime must be > 0, got {0}")]
    NonPositiveRuntime(f64),
}

/// Splits code into comparison tokens: identifiers and numeric literals stay
/// whole, every other non-whitespace character is its own token. An
/// identifier is a letter/underscore-led `[alnum_]` run; a numeric literal is
/// a digit run that keeps a `.` only when flanked by digits, so a suffix
/// letter starts a fresh token (`3.14f` → `3.14`, `f`). Comments are not
/// stripped; they count like any other text.
pub fn tokenize_code(code: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = code.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            let start = i;
            let numeric = c.is_ascii_digit();
            while i < chars.len() {
                let c = chars[i];
                let in_word = if numeric {
                    c.is_ascii_digit()
                } else {
                    c.is_alphanumeric() || c == '_'
                };
                if in_word {
                    i += 1;
                } else if numeric
                    && c == '.'
                    && i + 1 < chars.len()
                    && chars[i + 1].is_ascii_digit()
                {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(chars[start..i].iter().collect());
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }
    tokens
}

/// Longest contiguous matching block between `a[a_lo..a_hi]` and
/// `b[b_lo..b_hi]`: maximal length, ties broken by the leftmost start in `a`,
/// then the leftmost start in `b`.
fn longest_match(
    a: &[String],
    b: &[String],
    a_lo: usize,
    a_hi: usize,
    b_lo: usize,
    b_hi: usize,
) -> (usize, usize, usize) {
    let mut b_positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for j in b_lo..b_hi {
        b_positions.entry(b[j].as_str()).or_default().push(j);
    }
    let (mut best_i, mut best_j, mut best_len) = (a_lo, b_lo, 0usize);
    // run_lengths[j] = length of the common run ending at a[i-1], b[j-1].
    let mut run_lengths: HashMap<usize, usize> = HashMap::new();
    for i in a_lo..a_hi {
        let mut next_runs: HashMap<usize, usize> = HashMap::new();
        if let Some(positions) = b_positions.get(a[i].as_str()) {
            for &j in positions {
                let len = 1 + run_lengths.get(&j.wrapping_sub(1)).copied().unwrap_or(0);
                next_runs.insert(j, len);
                // Strict `>` keeps the earliest (i, then j) among equals:
                // candidates arrive in ascending i, then ascending j.
                if len > best_len {
                    best_len = len;
                    best_i = i + 1 - len;
                    best_j = j + 1 - len;
                }
            }
        }
        run_lengths = next_runs;
    }
    (best_i, best_j, best_len)
}

fn matched_tokens(
    a: &[String],
    b: &[String],
    a_lo: usize,
    a_hi: usize,
    b_lo: usize,
    b_hi: usize,
) -> usize {
    let (i, j, len) = longest_match(a, b, a_lo, a_hi, b_lo, b_hi);
    if len == 0 {
        return 0;
    }
    len + matched_tokens(a, b, a_lo, i, b_lo, j)
        + matched_tokens(a, b, i + len, a_hi, j + len, b_hi)
}

/// Token-level Ratcliff–Obershelp similarity: `2M / (|A| + |B|)` where `M`
/// counts tokens in recursively matched longest common blocks. Two empty
/// token lists are identical by definition.
pub fn sim_t(code_a: &str, code_b: &str) -> f64 {
    let a = tokenize_code(code_a);
    let b = tokenize_code(code_b);
    sim_t_tokens(&a, &b)
}

/// [`sim_t`] on pre-tokenized input.
pub fn sim_t_tokens(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let m = matched_tokens(a, b, 0, a.len(), 0, b.len());
    2.0 * m as f64 / (a.len() + b.len()) as f64
}

fn normalized_lines(code: &str) -> Vec<&str> {
    code.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}

/// Line-level similarity: `|multiset intersection| / max(|A|, |B|)` over
/// trimmed nonblank lines. Order-insensitive by construction.
pub fn sim_l(code_a: &str, code_b: &str) -> f64 {
    let a = normalized_lines(code_a);
    let b = normalized_lines(code_b);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for line in &a {
        *counts.entry(line).or_default() += 1;
    }
    let mut intersection = 0usize;
    for line in &b {
        if let Some(n) = counts.get_mut(line) {
            if *n > 0 {
                *n -= 1;
                intersection += 1;
            }
        }
    }
    intersection as f64 / a.len().max(b.len()) as f64
}

/// Speedup of the generated program over the reference in the target
/// language: `runtime_source / runtime_generated`. Higher is better; 1.0
/// means parity.
pub fn runtime_ratio(runtime_source_s: f64, runtime_generated_s: f64) -> Result<f64, MetricsError> {
    if runtime_generated_s <= 0.0 {
        return Err(MetricsError::NonPositiveRuntime(runtime_generated_s));
    }
    Ok(runtime_source_s / runtime_generated_s)
}

/// Four-decimal rendering used by reports and fixtures.
pub fn render4(value: f64) -> String {
    format!("{value:.4}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    Exact,
    #[default]
    Filtered,
}

impl std::str::FromStr for CompareMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(CompareMode::Exact),
            "filtered" => Ok(CompareMode::Filtered),
            other => Err(format!(
                "unknown compare mode `{other}` (use exact|filtered)"
            )),
        }
    }
}

fn timing_line_pattern() -> &'static Regex {
    static PATTERN: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"[tT]ime.*\d").expect("valid regex"))
}

const NUMERIC_REL_TOL: f64 = 1e-6;

fn tokens_equal(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => {
            if x == y {
                return true;
            }
            let scale = x.abs().max(y.abs());
            (x - y).abs() <= NUMERIC_REL_TOL * scale
        }
        _ => false,
    }
}

/// Compares program output with the reference.
///
/// `Exact` is byte equality. `Filtered` drops lines that report timings
/// (`time`/`Time` followed somewhere by a digit) and then compares line by
/// line, token by token, allowing numeric tokens a relative tolerance of
/// 1e-6.
pub fn compare_output(reference: &str, generated: &str, mode: CompareMode) -> bool {
    match mode {
        CompareMode::Exact => reference == generated,
        CompareMode::Filtered => {
            fn keep(text: &str) -> Vec<&str> {
                text.lines()
                    .filter(|l| !timing_line_pattern().is_match(l))
                    .collect()
            }
            let ref_lines = keep(reference);
            let gen_lines = keep(generated);
            if ref_lines.len() != gen_lines.len() {
                return false;
            }
            ref_lines.iter().zip(&gen_lines).all(|(r, g)| {
                let r_tokens: Vec<&str> = r.split_whitespace().collect();
                let g_tokens: Vec<&str> = g.split_whitespace().collect();
                r_tokens.len() == g_tokens.len()
                    && r_tokens
                        .iter()
                        .zip(&g_tokens)
                        .all(|(a, b)| tokens_equal(a, b))
            })
        }
    }
}
