//! Think/answer segmentation of raw model responses, the format reward,
//! and a deterministic offline claim scanner for judge-free operation.
//!
//! Malformed responses are data, not errors: segmentation never fails, it
//! just reports `well_formed = false` and whatever blocks it could find.

use std::sync::LazyLock;

use regex::Regex;

use crate::model::{validate_claimset, ClaimSet, Strictness};
use crate::timestamp;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// A segmented response: the first think and answer blocks, the number of
/// closed think blocks, and whether the response follows the canonical
/// one-think-then-one-answer shape with non-empty contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedTrace {
    pub think_text: Option<String>,
    pub answer_text: Option<String>,
    pub think_count: usize,
    pub well_formed: bool,
}

impl SegmentedTrace {
    pub fn think(&self) -> Option<&str> {
        self.think_text.as_deref()
    }

    pub fn answer(&self) -> Option<&str> {
        self.answer_text.as_deref()
    }
}

/// One closed tag block: byte offsets of the whole block and its contents.
struct Block {
    start: usize,
    end: usize,
    content: String,
}

fn find_blocks(text: &str, open: &str, close: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut cursor = 0;
    while let Some(rel_open) = text[cursor..].find(open) {
        let open_at = cursor + rel_open;
        let content_at = open_at + open.len();
        match text[content_at..].find(close) {
            Some(rel_close) => {
                let close_at = content_at + rel_close;
                blocks.push(Block {
                    start: open_at,
                    end: close_at + close.len(),
                    content: text[content_at..close_at].to_string(),
                });
                cursor = close_at + close.len();
            }
            // An unclosed opening tag is not a block.
            None => break,
        }
    }
    blocks
}

fn segment_impl(response_text: &str, strict: bool) -> SegmentedTrace {
    let thinks = find_blocks(response_text, THINK_OPEN, THINK_CLOSE);
    let answers = find_blocks(response_text, ANSWER_OPEN, ANSWER_CLOSE);

    let think_count = thinks.len();
    let think_text = thinks.first().map(|b| b.content.clone());
    let answer_text = answers.first().map(|b| b.content.clone());

    let mut well_formed = think_count == 1
        && answers.len() == 1
        && thinks[0].end <= answers[0].start
        && !thinks[0].content.trim().is_empty()
        && !answers[0].content.trim().is_empty();

    if strict && well_formed {
        let before = &response_text[..thinks[0].start];
        let between = &response_text[thinks[0].end..answers[0].start];
        let after = &response_text[answers[0].end..];
        if !(before.trim().is_empty() && between.trim().is_empty() && after.trim().is_empty()) {
            well_formed = false;
        }
    }

    SegmentedTrace {
        think_text,
        answer_text,
        think_count,
        well_formed,
    }
}

/// Segments a response into its first think and answer blocks.
///
/// Tag matching is case-sensitive and attribute-free. Text outside the two
/// blocks does not affect well-formedness; use [`segment_strict`] to forbid
/// it.
pub fn segment(response_text: &str) -> SegmentedTrace {
    segment_impl(response_text, false)
}

/// Like [`segment`] but additionally requires that nothing except
/// whitespace appears outside the think and answer blocks.
pub fn segment_strict(response_text: &str) -> SegmentedTrace {
    segment_impl(response_text, true)
}

/// Format reward: 1 iff the trace is well-formed.
pub fn format_reward(trace: &SegmentedTrace) -> u8 {
    u8::from(trace.well_formed)
}

static KEY_SCAN: LazyLock<Regex> = LazyLock::new(|| {
    // Candidate keys embedded in prose: a time, optionally a dash (plain or
    // en/em) and a second time. Boundary guards keep digits and colons from
    // bleeding into a match from either side.
    Regex::new(
        r"(?x)
        (?:^|[^0-9:])
        (
            \d{2}(?::\d{2}){1,2}
            (?:[-\u{2013}\u{2014}]\d{2}(?::\d{2}){1,2})?
        )
        (?:[^0-9]|$)",
    )
    .expect("static regex compiles")
});

const MAX_SENTENCE_CHARS: usize = 200;

fn enclosing_sentence(text: &str, hit_start: usize) -> String {
    let is_terminator = |c: char| matches!(c, '.' | '!' | '?');
    let sentence_start = text[..hit_start]
        .rfind(is_terminator)
        .map(|i| i + 1)
        .unwrap_or(0);
    let sentence_end = text[hit_start..]
        .find(is_terminator)
        .map(|i| hit_start + i + 1)
        .unwrap_or(text.len());
    let sentence = text[sentence_start..sentence_end].trim();
    sentence.chars().take(MAX_SENTENCE_CHARS).collect()
}

/// Deterministic claim scanner: finds canonical timestamp keys embedded in
/// prose and pairs each with its enclosing sentence. Duplicate keys keep
/// the first sentence; unparseable hits are skipped. The result always
/// validates leniently, so scanning never fails.
pub fn scan_claims(text: &str) -> ClaimSet {
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut search_from = 0;
    while let Some(caps) = KEY_SCAN.captures(&text[search_from..]) {
        let group = caps.get(1).expect("group 1 always present");
        let abs_start = search_from + group.start();
        let candidate = group.as_str();
        // Resume after the candidate itself so adjacent keys separated by a
        // single boundary character are still seen.
        search_from += group.end();

        let Ok(key) = timestamp::parse_key_lenient(candidate) else {
            continue;
        };
        let normalized = key.text().to_string();
        if seen.contains(&normalized) {
            continue;
        }
        let sentence = enclosing_sentence(text, abs_start);
        if sentence.is_empty() {
            continue;
        }
        seen.insert(normalized.clone());
        entries.push((normalized, sentence));
    }

    validate_claimset(&entries, Strictness::Lenient)
        .expect("scanner emits unique canonical keys and non-empty sentences")
}
