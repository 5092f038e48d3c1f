//! Deterministic offline stand-ins for the answer-extraction judges, used
//! when no endpoint is configured or a replay fixture is missing. They are
//! intentionally conservative: explicit uppercase conclusions and option
//! markers only, so prose like "the answer is a red car" falls through to
//! option-text matching instead of being read as the letter A.

use std::sync::LazyLock;

use regex::Regex;

use crate::model::TraceRecord;

/// Sentinel for "no answer could be extracted", mirroring the parsing
/// judge's contract.
pub const UNKNOWN: &str = "UNKNOWN";

fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_quotes(text: &str) -> &str {
    text.trim_matches(|c| matches!(c, '"' | '\'' | '`'))
}

static BARE_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\(\[]?([A-Za-z])[\)\]]?[.:]?$").unwrap());
static OPTION_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^option\s+([a-z])\b").unwrap());
static LETTER_THEN_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Z])[.)]\s").unwrap());
static ANSWER_IS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\banswer\s*(?:is|:)\s*(.+)$").unwrap());

/// Offline version of the final-answer parser: normalizes an answer-block
/// snippet to a single letter (MCQ) or a minimal text answer (open form).
pub fn extract_answer_offline(text: &str, record: &TraceRecord) -> String {
    let collapsed = collapse_ws(text);
    let trimmed = strip_quotes(collapsed.trim()).trim();
    if trimmed.is_empty() {
        return UNKNOWN.to_string();
    }

    if record.is_mcq() {
        if let Some(caps) = BARE_LETTER.captures(trimmed) {
            return caps[1].to_ascii_uppercase();
        }
        if let Some(caps) = OPTION_PREFIX.captures(trimmed) {
            return caps[1].to_ascii_uppercase();
        }
        if let Some(caps) = LETTER_THEN_TEXT.captures(trimmed) {
            return caps[1].to_string();
        }
        if let Some(letter) = record.option_letter_for_text(trimmed) {
            return letter.to_string();
        }
        if let Some(caps) = ANSWER_IS.captures(trimmed) {
            let tail = strip_quotes(caps[1].trim().trim_end_matches('.')).trim();
            if let Some(caps) = BARE_LETTER.captures(tail) {
                return caps[1].to_ascii_uppercase();
            }
            if let Some(letter) = record.option_letter_for_text(tail) {
                return letter.to_string();
            }
        }
        return UNKNOWN.to_string();
    }

    trimmed.trim_end_matches('.').trim().to_string()
}

// Conclusion patterns scanned over think blocks. Letters are accepted only
// in unambiguous positions: uppercase finals, or lowercase behind an
// explicit option/choice marker.
static THINK_LETTER_PATTERNS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    // Case-insensitivity is scoped to the keywords: the captured letter
    // stays uppercase-only except behind an explicit option/choice marker.
    vec![
        Regex::new(r"\b(?i:(?:final answer|answer|conclusion)\s*(?:is|:)?)\s*\(?([A-Z])\)?\b")
            .unwrap(),
        Regex::new(r"\b(?i:therefore,?)\s*\(?([A-Z])\)?\b").unwrap(),
        Regex::new(r"(?i)\b(?:option|choice)\s*\(?([a-z])\)?\b").unwrap(),
        Regex::new(r"\b([A-Z])\s+is\s+correct\b").unwrap(),
        Regex::new(r"\b(?i:go with)\s*\(?([A-Z])\)?\b").unwrap(),
    ]
});

static THINK_OPEN_CONCLUSION: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    vec![
        Regex::new(r"(?i)\b(?:final answer|answer)\s*(?:is|:)\s*(.+?)(?:[.!?\n]|$)").unwrap(),
        Regex::new(r"(?i)\btherefore,?\s+(?:it is|it's)?\s*(.+?)(?:[.!?\n]|$)").unwrap(),
    ]
});

/// Offline version of the reasoning-conclusion extractor: finds the LAST
/// explicit conclusion in a think block.
pub fn extract_conclusion_offline(text: &str, record: &TraceRecord) -> String {
    if record.is_mcq() {
        let valid: Vec<char> = record
            .options
            .iter()
            .flatten()
            .map(|o| o.letter)
            .collect();

        let mut last: Option<(usize, String)> = None;
        for pattern in THINK_LETTER_PATTERNS.iter() {
            for caps in pattern.captures_iter(text) {
                let m = caps.get(1).expect("one capture group");
                let letter = m.as_str().to_ascii_uppercase();
                let letter_char = letter.chars().next().expect("single letter");
                if !valid.contains(&letter_char) {
                    continue;
                }
                if last.as_ref().is_none_or(|(pos, _)| m.start() >= *pos) {
                    last = Some((m.start(), letter));
                }
            }
        }
        if let Some((_, letter)) = last {
            return letter;
        }

        // No explicit letter: fall back to the last option text mentioned.
        let lowered = text.to_lowercase();
        let mut best: Option<(usize, char)> = None;
        for opt in record.options.iter().flatten() {
            let needle = opt.text.trim().to_lowercase();
            if needle.is_empty() {
                continue;
            }
            if let Some(pos) = lowered.rfind(&needle) {
                if best.is_none_or(|(p, _)| pos >= p) {
                    best = Some((pos, opt.letter));
                }
            }
        }
        if let Some((_, letter)) = best {
            return letter.to_string();
        }
        return UNKNOWN.to_string();
    }

    let mut last: Option<(usize, String)> = None;
    for pattern in THINK_OPEN_CONCLUSION.iter() {
        for caps in pattern.captures_iter(text) {
            let m = caps.get(1).expect("one capture group");
            let cleaned = strip_quotes(m.as_str().trim()).trim().to_string();
            if cleaned.is_empty() {
                continue;
            }
            if last.as_ref().is_none_or(|(pos, _)| m.start() >= *pos) {
                last = Some((m.start(), cleaned));
            }
        }
    }
    last.map(|(_, text)| text)
        .unwrap_or_else(|| UNKNOWN.to_string())
}

fn parse_number(text: &str) -> Option<f64> {
    let cleaned: String = text
        .trim()
        .trim_end_matches('%')
        .chars()
        .filter(|c| *c != ',')
        .collect();
    let cleaned = cleaned.trim();
    if cleaned.is_empty() {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Numeric comparison at a relative tolerance of 1e-6.
fn numbers_match(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs())
}

fn normalize_open(text: &str) -> String {
    strip_quotes(collapse_ws(text).trim())
        .trim()
        .trim_end_matches('.')
        .trim()
        .to_lowercase()
}

/// Whether two extracted answers express the same conclusion. `UNKNOWN`
/// never matches anything, including itself.
pub fn answers_match(a: &str, b: &str, record: &TraceRecord) -> bool {
    if a == UNKNOWN || b == UNKNOWN {
        return false;
    }
    if record.is_mcq() {
        let norm = |s: &str| -> Option<char> {
            let s = s.trim();
            if s.len() == 1 {
                let c = s.chars().next().unwrap();
                c.is_ascii_alphabetic().then(|| c.to_ascii_uppercase())
            } else {
                record.option_letter_for_text(s)
            }
        };
        return match (norm(a), norm(b)) {
            (Some(x), Some(y)) => x == y,
            _ => normalize_open(a) == normalize_open(b),
        };
    }
    if let (Some(x), Some(y)) = (parse_number(a), parse_number(b)) {
        return numbers_match(x, y);
    }
    normalize_open(a) == normalize_open(b)
}

/// Whether an extracted answer matches the ground truth. MCQ records
/// compare single letters after normalization (the ground truth may also be
/// spelled as the option's text); open-form records compare
/// case-insensitively with a numeric tolerance when both sides parse as
/// numbers.
pub fn matches_ground_truth(extracted: &str, record: &TraceRecord) -> bool {
    answers_match(extracted, record.answer_gt.trim(), record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::McqOption;
    use std::collections::BTreeMap;

    fn record(options: Option<Vec<(char, &str)>>, gt: &str) -> TraceRecord {
        TraceRecord {
            id: "t".into(),
            question: "q".into(),
            options: options.map(|opts| {
                opts.into_iter()
                    .map(|(letter, text)| McqOption {
                        letter,
                        text: text.into(),
                    })
                    .collect()
            }),
            answer_gt: gt.into(),
            response_text: String::new(),
            reference_reasoning: None,
            reference_claims: None,
            meta: BTreeMap::new(),
        }
    }

    fn smoke_record() -> TraceRecord {
        record(Some(vec![('A', "Smoke"), ('B', "Fire"), ('E', "Water")]), "A")
    }

    #[test]
    fn answer_block_letter_forms() {
        let rec = smoke_record();
        for text in ["A", "(a)", "[A]", "a.", "A:", "option a", "A) Smoke"] {
            assert_eq!(extract_answer_offline(text, &rec), "A", "for {text:?}");
        }
    }

    #[test]
    fn answer_block_option_text_maps_to_letter() {
        let rec = smoke_record();
        assert_eq!(extract_answer_offline("Smoke", &rec), "A");
        assert_eq!(extract_answer_offline("the answer is Fire", &rec), "B");
    }

    #[test]
    fn answer_block_unknown_when_unparseable() {
        let rec = smoke_record();
        assert_eq!(extract_answer_offline("no idea", &rec), UNKNOWN);
        assert_eq!(extract_answer_offline("   ", &rec), UNKNOWN);
    }

    #[test]
    fn open_form_answer_is_minimal_text() {
        let rec = record(None, "2");
        assert_eq!(extract_answer_offline("  2 \n", &rec), "2");
        assert_eq!(extract_answer_offline("Smoke.", &rec), "Smoke");
    }

    #[test]
    fn think_conclusion_takes_last_explicit_choice() {
        let rec = smoke_record();
        let think = "At first B seems right. But wait, the sign suggests otherwise. \
                     Therefore, A. Actually, no: the answer is E";
        assert_eq!(extract_conclusion_offline(think, &rec), "E");
    }

    #[test]
    fn think_conclusion_via_option_marker() {
        let rec = smoke_record();
        let think = "Both frames support option a here.";
        assert_eq!(extract_conclusion_offline(think, &rec), "A");
    }

    #[test]
    fn think_conclusion_falls_back_to_option_text() {
        let rec = smoke_record();
        let think = "The grey plume drifting from the chimney is smoke.";
        assert_eq!(extract_conclusion_offline(think, &rec), "A");
    }

    #[test]
    fn lowercase_article_is_not_a_letter() {
        let rec = record(Some(vec![('A', "a red car"), ('B', "a blue van")]), "B");
        let think = "Looking closely, the answer is a blue van.";
        assert_eq!(extract_conclusion_offline(think, &rec), "B");
    }

    #[test]
    fn open_form_conclusion_capture() {
        let rec = record(None, "2");
        assert_eq!(
            extract_conclusion_offline("Counting both, the answer is 2.", &rec),
            "2"
        );
        assert_eq!(
            extract_conclusion_offline("No conclusion here at all", &rec),
            UNKNOWN
        );
    }

    #[test]
    fn match_rules() {
        let rec = smoke_record();
        assert!(answers_match("A", "a", &rec));
        assert!(answers_match("Smoke", "A", &rec));
        assert!(!answers_match("A", "E", &rec));
        assert!(!answers_match(UNKNOWN, UNKNOWN, &rec));

        let open = record(None, "172800");
        assert!(answers_match("172,800", "172800", &open));
        assert!(answers_match("Smoke", "smoke.", &open));
        assert!(!answers_match("172800", "172801", &open));
        assert!(matches_ground_truth("172800.0000001", &open));
    }

    #[test]
    fn ground_truth_as_option_text() {
        let rec = record(Some(vec![('A', "Smoke"), ('B', "Fire")]), "Smoke");
        assert!(matches_ground_truth("A", &rec));
        assert!(!matches_ground_truth("B", &rec));
    }
}
