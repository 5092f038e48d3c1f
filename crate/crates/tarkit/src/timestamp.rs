//! Bit-exact parsing and formatting of the strict timestamp-key grammar.
//!
//! A key is a single time or a hyphenated range of two times. Each time is
//! `MM:SS` or `HH:MM:SS` with zero-padded two-digit fields; seconds and
//! non-leading minutes must be below 60, the leading field may run to 99.
//! Accepted shapes: `MM:SS`, `HH:MM:SS`, `MM:SS-MM:SS`, `MM:SS-HH:MM:SS`,
//! `HH:MM:SS-HH:MM:SS`.

use serde::{Deserialize, Serialize};

use crate::model::TimeSpan;

/// Parse failures for timestamp keys.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimestampError {
    /// The text does not start with a well-formed time (plain seconds such
    /// as `"6"` or `"020"` land here).
    #[error("invalid timestamp format in {text:?}")]
    InvalidFormat { text: String },
    /// A well-formed time was followed by extra characters (`"end"`,
    /// `"EOF"`, `"+"`, a malformed range tail, ...).
    #[error("trailing characters after timestamp in {text:?}")]
    TrailingGarbage { text: String },
    /// A range whose start is after its end.
    #[error("inverted range in {text:?}: start {start}s > end {end}s")]
    InvertedRange { text: String, start: u32, end: u32 },
    /// Seconds of 60 or more, or non-leading minutes of 60 or more.
    #[error("field overflow in {text:?}: {field} is {value}, must be < 60")]
    FieldOverflow {
        text: String,
        field: &'static str,
        value: u32,
    },
}

/// A validated key: canonical text plus the span it denotes.
///
/// The text is always the canonical rendering of the span, so non-canonical
/// accepted inputs (e.g. `"00:01:05"`, which normalizes to `"01:05"`) come
/// out normalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimestampKey {
    text: String,
    span: TimeSpan,
}

impl TimestampKey {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn span(&self) -> TimeSpan {
        self.span
    }
}

/// One scanned time: total seconds plus how many fields it used (2 or 3).
struct ScannedTime {
    seconds: u32,
    fields: u8,
    next: usize,
}

fn two_digits(bytes: &[u8], pos: usize) -> Option<u32> {
    if pos + 2 <= bytes.len() && bytes[pos].is_ascii_digit() && bytes[pos + 1].is_ascii_digit() {
        Some(u32::from(bytes[pos] - b'0') * 10 + u32::from(bytes[pos + 1] - b'0'))
    } else {
        None
    }
}

/// Scans one `MM:SS` or `HH:MM:SS` time starting at `pos`. Returns `None`
/// when no structurally complete time starts there; field overflows are
/// reported as errors because the structure was otherwise valid.
fn scan_time(
    text: &str,
    bytes: &[u8],
    pos: usize,
) -> Result<Option<ScannedTime>, TimestampError> {
    let Some(first) = two_digits(bytes, pos) else {
        return Ok(None);
    };
    if bytes.get(pos + 2) != Some(&b':') {
        return Ok(None);
    }
    let Some(second) = two_digits(bytes, pos + 3) else {
        return Ok(None);
    };

    // A third two-digit field turns MM:SS into HH:MM:SS.
    let three = bytes.get(pos + 5) == Some(&b':') && two_digits(bytes, pos + 6).is_some();
    if three {
        let third = two_digits(bytes, pos + 6).expect("checked above");
        if second >= 60 {
            return Err(TimestampError::FieldOverflow {
                text: text.to_string(),
                field: "minutes",
                value: second,
            });
        }
        if third >= 60 {
            return Err(TimestampError::FieldOverflow {
                text: text.to_string(),
                field: "seconds",
                value: third,
            });
        }
        Ok(Some(ScannedTime {
            seconds: first * 3600 + second * 60 + third,
            fields: 3,
            next: pos + 8,
        }))
    } else {
        if second >= 60 {
            return Err(TimestampError::FieldOverflow {
                text: text.to_string(),
                field: "seconds",
                value: second,
            });
        }
        Ok(Some(ScannedTime {
            seconds: first * 60 + second,
            fields: 2,
            next: pos + 5,
        }))
    }
}

/// Strict parse of a timestamp key. The whole input must be consumed.
pub fn parse_key(text: &str) -> Result<TimestampKey, TimestampError> {
    let bytes = text.as_bytes();
    let invalid = || TimestampError::InvalidFormat {
        text: text.to_string(),
    };
    let trailing = || TimestampError::TrailingGarbage {
        text: text.to_string(),
    };

    let first = scan_time(text, bytes, 0)?.ok_or_else(invalid)?;

    let span = if first.next == bytes.len() {
        TimeSpan::new(first.seconds, first.seconds).expect("point span from bounded fields")
    } else if bytes[first.next] == b'-' {
        // Anything after the hyphen that is not a complete time is garbage
        // ("00:16-end", "00:16-").
        let second = scan_time(text, bytes, first.next + 1)?.ok_or_else(trailing)?;
        if second.next != bytes.len() {
            return Err(trailing());
        }
        // The grammar never pairs an HH:MM:SS start with an MM:SS end.
        if first.fields == 3 && second.fields == 2 {
            return Err(invalid());
        }
        if first.seconds > second.seconds {
            return Err(TimestampError::InvertedRange {
                text: text.to_string(),
                start: first.seconds,
                end: second.seconds,
            });
        }
        TimeSpan::new(first.seconds, second.seconds).expect("ordered range from bounded fields")
    } else {
        return Err(trailing());
    };

    Ok(TimestampKey {
        text: format_key(span),
        span,
    })
}

/// Pre-normalizes near-miss formatting before strict parsing: strips all
/// whitespace and maps en/em dashes to a plain hyphen. Meant for model
/// output; reference files should go through [`parse_key`] directly.
pub fn parse_key_lenient(text: &str) -> Result<TimestampKey, TimestampError> {
    let normalized: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '\u{2013}' | '\u{2014}' => '-',
            other => other,
        })
        .collect();
    parse_key(&normalized)
}

fn format_seconds(total: u32) -> String {
    if total < 3600 {
        format!("{:02}:{:02}", total / 60, total % 60)
    } else {
        format!(
            "{:02}:{:02}:{:02}",
            total / 3600,
            (total % 3600) / 60,
            total % 60
        )
    }
}

/// Canonical key text for a span: `MM:SS` below one hour, `HH:MM:SS` from
/// there up; point spans render as a single time, ranges join two times
/// with a single hyphen.
pub fn format_key(span: TimeSpan) -> String {
    if span.is_point() {
        format_seconds(span.start())
    } else {
        format!(
            "{}-{}",
            format_seconds(span.start()),
            format_seconds(span.end())
        )
    }
}

/// Rounds decimal seconds to the whole-second grid, half away from zero.
/// The key grammar has no sub-second resolution, so any decimal mention
/// (e.g. `01.77s`) must pass through this before becoming a span.
pub fn round_seconds(value: f64) -> u32 {
    if !value.is_finite() || value <= 0.0 {
        return 0;
    }
    (value.round() as u64).min(u64::from(TimeSpan::MAX_SECONDS)) as u32
}

/// Gap in seconds between two spans: zero when they overlap or touch,
/// otherwise the distance between the nearest endpoints. For two point
/// spans this is the absolute difference of the points.
pub fn span_distance(a: TimeSpan, b: TimeSpan) -> u32 {
    if a.start() > b.end() {
        a.start() - b.end()
    } else if b.start() > a.end() {
        b.start() - a.end()
    } else {
        0
    }
}
