//! Pulls code out of LLM responses: fenced blocks first, then a
//! code-shaped-text heuristic as fallback.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no code block found in response ({reason})")]
pub struct ExtractionFailed {
    pub reason: String,
}

/// A code block pulled out of a response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedCode {
    pub code: String,
    /// Language tag on the opening fence, if any (` ```cpp ` -> `cpp`).
    pub language_tag: Option<String>,
    /// Index of the chosen block among all fenced blocks found.
    pub block_index: usize,
    /// How many fenced blocks the response contained.
    pub total_blocks: usize,
}

struct FencedBlock {
    code: String,
    language_tag: Option<String>,
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn fence_tag(line: &str) -> Option<String> {
    let rest = line.trim_start().trim_start_matches('`').trim();
    if rest.is_empty() {
        None
    } else {
        Some(rest.to_string())
    }
}

fn fenced_blocks(response: &str) -> Vec<FencedBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<(Option<String>, Vec<&str>)> = None;
    for line in response.split('\n') {
        match current {
            None if is_fence(line) => current = Some((fence_tag(line), Vec::new())),
            None => {}
            Some((tag, lines)) if is_fence(line) => {
                blocks.push(FencedBlock {
                    code: lines.join("\n"),
                    language_tag: tag,
                });
                current = None;
            }
            Some((tag, mut lines)) => {
                lines.push(line);
                current = Some((tag, lines));
            }
        }
    }
    // An unclosed fence swallows the rest of the response; models drop the
    // closing fence often enough that rejecting here would be gratuitous.
    if let Some((tag, lines)) = current {
        blocks.push(FencedBlock {
            code: lines.join("\n"),
            language_tag: tag,
        });
    }
    blocks
}

/// At least 60% of nonempty lines looking like statements (ending in `;`,
/// `{`, `}` or starting with `#`) lets a fenceless response pass as code.
fn looks_like_code(text: &str) -> bool {
    let nonempty: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if nonempty.is_empty() {
        return false;
    }
    let code_like = nonempty
        .iter()
        .filter(|l| l.ends_with(';') || l.ends_with('{') || l.ends_with('}') || l.starts_with('#'))
        .count();
    code_like * 100 >= nonempty.len() * 60
}

/// Extracts the code block to compile from an LLM response.
///
/// Fenced blocks win; with several, the longest by character count is chosen
/// (ties go to the first). Without any fence, the whole response is accepted
/// if it looks like code; otherwise extraction fails.
pub fn extract_code(response: &str) -> Result<ExtractedCode, ExtractionFailed> {
    let blocks = fenced_blocks(response);
    let total_blocks = blocks.len();
    let chosen = blocks
        .into_iter()
        .enumerate()
        .filter(|(_, b)| !b.code.trim().is_empty())
        .max_by(|(ai, a), (bi, b)| {
            (a.code.len(), std::cmp::Reverse(ai)).cmp(&(b.code.len(), std::cmp::Reverse(bi)))
        });
    if let Some((block_index, block)) = chosen {
        return Ok(ExtractedCode {
            code: block.code,
            language_tag: block.language_tag,
            block_index,
            total_blocks,
        });
    }
    if total_blocks == 0 && looks_like_code(response) {
        return Ok(ExtractedCode {
            code: response.to_string(),
            language_tag: None,
            block_index: 0,
            total_blocks: 1,
        });
    }
    Err(ExtractionFailed {
        reason: if total_blocks == 0 {
            "no fenced block and the text does not look like code".to_string()
        } else {
            format!("{total_blocks} fenced block(s), all empty")
        },
    })
}
