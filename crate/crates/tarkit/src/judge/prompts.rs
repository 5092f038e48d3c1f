//! Prompt templates for the five judge roles, rendered deterministically:
//! identical inputs produce byte-identical requests.

use crate::model::TraceRecord;
use crate::trace::SegmentedTrace;

use super::{DecodeParams, JudgeError, JudgeRequest, PromptKind};

/// Fixed post prompt appended to every training/evaluation question to
/// elicit the think/answer structure. Kept as a constant so format checks
/// and request rendering agree on the exact wording.
pub const POST_PROMPT: &str = "Please think about this question as if you were a human pondering deeply. Engage in an internal dialogue using expressions such as 'let me think', 'wait', 'Hmm', 'oh, I see', 'let's break it down', etc, or other natural language thought expressions. It's encouraged to include self-reflection or verification in the reasoning process. Provide your detailed reasoning between the <think> and </think> tags, and then give your final answer between the <answer> and </answer> tags.";

const ANSWER_FROM_THINK_SYSTEM: &str = "You are a strict extractor.
Task: Read ONLY the Reasoning text appended at the end of the user message and output a SINGLE LETTER corresponding to the option that the Reasoning explicitly concludes as the final answer.

Rules (follow in order):
1. Look ONLY at the Reasoning text. Ignore the options text for decision-making.
2. If the Reasoning contains an explicit final choice (e.g., \"Therefore, D\", \"Answer: A\"), output that letter. If multiple explicit finals appear, output the LAST one.
3. If the Reasoning labels a single option as correct (e.g., \"D is correct\"), output that letter. If multiple appear, output the LAST one.
4. If the Reasoning states the correct option by its text (e.g., \"the correct answer is 'red car'\"), match that text exactly to the provided options and output the corresponding letter. Prefer the LAST explicit conclusion.
5. Do NOT judge correctness or infer meaning. Output only the explicit final conclusion.
6. Output a single uppercase letter (A--Z). No punctuation, no explanations.";

const ANSWER_FROM_ANSWER_SYSTEM: &str = "You are a deterministic parsing agent.
Task: Read ONLY the provided text and emit a SINGLE-LINE answer in the exact format requested.

Hard rules (apply all):
1. Do not infer or reason beyond the text. If the text lacks a valid answer, output exactly: UNKNOWN.
2. Output must contain no explanations, no extra words, no labels, no code fences, no quotes, no brackets.
3. Strip leading/trailing whitespace. No trailing punctuation unless required by format (e.g., a %).
4. Normalize internal whitespace to single spaces.
5. Treat case-insensitive tokens like \"option c\", \"(c)\", \"[c]\", \"C)\" as the letter C when MCQ is requested.";

const MCQ_OUTPUT_FORMAT: &str = "MCQ output format:
- Return ONLY one capital letter A--Z on a single line.
- Do NOT include any other characters or spaces.";

const OPEN_OUTPUT_FORMAT: &str = "Open-form output format:
- If numeric, return ONLY the number.
- If textual, return ONLY the minimal text answer.
- Output must be a single line with no extra characters.";

const VAS_SYSTEM: &str = "You are an expert judge of **claimed visual grounding** in video QA chain-of-thought. You will receive an Input (question/options/prompt) and a model Response that includes <think>...</think> and <answer>...</answer> tags.
Your task: Evaluate how much the reasoning inside <think> and </think> only *claims* to rely on concrete visual evidence from the video versus using text patterns, prior knowledge, or guessing. You do not have the video; score what the reasoning asserts, not whether those assertions are true or the final answer is correct.

What counts as visual grounding signals (positive cues):
1. Concrete, specific references to visible entities and attributes (colors, positions, counts, on-screen text/OCR).
2. Spatio-temporal descriptions tied to the video (\"first/then,\" \"left/right,\" \"foreground/background,\" scene changes).
3. Actions/interactions clearly described as seen (\"picks up,\" \"points at,\" \"walks behind\").
4. Visual logic chained to the question (\"Because the sign reads 'Gate B' and the arrow points left...\").
5. Mentions like \"the video shows,\" \"the video states,\" or \"the video indicates...\" count as *moderate visual grounding* **if** they reference specific factual content (e.g., numbers, object names, or events), even without spatial detail.

What counts as non-visual or weak grounding (negative cues):
1. Generic mentions of \"the video\" with no specific content (\"the video talks about cars\").
2. Option pattern matching, stereotypes/common knowledge, or generic phrases (\"based on the context,\" \"usually...\").
3. Restating the question or options with \"I see\" but no concrete visual detail.
4. Timestamp name-dropping without linked content, irrelevant flourish, or contradictions.

Edge cases:
- If multiple <think> blocks exist, judge the first.
- If <think> is missing or empty -> score 0.
- Ignore <answer> when scoring.

Scoring (0-10, integer):
1. 10 (Excellent): Dense, highly specific, step-by-step visual reasoning directly addressing the question.
2. 7-9 (Strong): Clearly video-based with several specific claims tied to what's shown, even if phrased verbally (\"the video states...\").
3. 4-6 (Moderate): Claims to recall or cite specific video facts (numbers, entities, or comparisons) but lacks spatial or temporal detail.
4. 1-3 (Weak): Minimal visual content; mostly generic or option-pattern reasoning with only token mentions of the video.
5. 0 (None): No visual grounding; guessing, meta-reasoning only, or <think> absent.

Output: Return JSON only with keys \"score\" (0-10 integer) and \"rationale\" (2-3 concise sentences citing the most important cues; do not mention lack of video).";

const CLAIM_EXTRACT_SYSTEM: &str = "You are a precise temporal information extraction assistant.

Goal:
Given ONLY the provided text, extract every timestamp mention and produce a compact JSON object mapping each timestamp (key) to ONE short sentence (value) describing what happens at that time according to the text.

Output format (STRICT):
1. Return ONLY a JSON object. No prose, no code fences, no explanations.
2. Keys: timestamps exactly as mentioned, normalized to MM:SS or HH:MM:SS with leading zeros.
   - Single time example: \"00:42\"
   - Range examples: \"00:42-00:45\", \"01:45-02:01\"
3. Order keys by start time ascending.
4. If the text uses phrases like \"around the 16-second mark\" or \"at about 1:02\", convert to \"00:16\" or \"01:02\".
5. If a single continuous action is described across adjacent times (e.g., 00:07 and 00:08), you MAY consolidate into a range \"00:07-00:08\" with one concise sentence.
6. If the same timestamp appears multiple times, merge into a single key and summarize succinctly.
7. If no timestamps are present, return {}.

Content rules:
1. Derive sentences ONLY from the given text. No hallucinations.
2. Each value is a brief, plain-language clause (<= 10 words), sentence case, ending with a period.
3. Prefer action-focused wording (\"Performer executes a cartwheel while holding the jump rope.\").";

const CONSISTENCY_SYSTEM: &str = "You are a meticulous auditor. Determine whether the reasoning (THINK) and the final answer (ANSWER) are logically consistent with each other for the given question. Ignore style, verbosity, or extra details; focus strictly on whether the conclusion in THINK matches and supports the final ANSWER for the same question.";

fn render_options(record: &TraceRecord) -> String {
    let mut out = String::from("Options:\n");
    if let Some(options) = &record.options {
        for opt in options {
            out.push_str(&format!("{}. {}\n", opt.letter, opt.text));
        }
    }
    out
}

/// Question plus options, as handed to the scored model.
fn render_input_text(record: &TraceRecord) -> String {
    if record.is_mcq() {
        format!("{}\n{}", record.question, render_options(record).trim_end())
    } else {
        record.question.clone()
    }
}

fn answer_extraction_user(record: &TraceRecord, label: &str, payload: &str) -> String {
    if record.is_mcq() {
        format!(
            "{}\n{label}:\n{payload}\n\n{MCQ_OUTPUT_FORMAT}",
            render_options(record)
        )
    } else {
        format!("{label}:\n{payload}\n\n{OPEN_OUTPUT_FORMAT}")
    }
}

fn claim_extract_user(reasoning: &str) -> String {
    format!(
        "Extract timestamped events from the following text and return ONLY the JSON object as specified.

STRICT KEYS FORMAT:
1. Use ONLY zero-padded MM:SS or HH:MM:SS.
2. For ranges, use a single hyphen: \"MM:SS-HH:MM:SS\".
3. Do NOT output plain seconds without a colon (e.g., \"6\" or \"020\" is forbidden).
4. Do NOT output words like \"end\", \"EOF\", \"+\", or any trailing symbols.
5. If the text mentions decimal seconds (e.g., 01.77s or 3.5s), round to the nearest second BEFORE emitting.
6. Normalize phrases like \"around 16 seconds\" to \"00:16\".
7. Keys must be unique and ordered by start time ascending.
8. If no timestamps are present, return {{}} exactly.

VALUES:
1. Each value is ONE short clause (<= 10 words), sentence case, action-focused, ends with a period.
2. Derive strictly from the provided text (no hallucinations).

Return ONLY the JSON object. No code fences, no explanations.

The reasoning text is:
{reasoning}"
    )
}

fn vas_user(record: &TraceRecord) -> String {
    format!(
        "Evaluate ATTENTION-TO-VIDEO in the model's reasoning. Score only the text inside <think>...</think>, not the final <answer> and not answer correctness.

You do not have access to the video. Judge whether the reasoning claims to use concrete visual evidence (what is seen, where it appears, how it changes) versus relying on generic patterns, options, or prior knowledge.

Use this rubric (0-10):
1. 10: Dense, specific visual descriptions (entities, attributes, counts, on-screen text, spatial relations, temporal order) directly supporting the question.
2. 7-9: Clearly video-based reasoning with multiple specific claims tied to what the video shows, even if phrased as \"the video states...\" or \"the video shows...\".
3. 4-6: Claims to recall or cite specific video facts (numbers, labels, or entities) but lacks spatial or visual detail.
4. 1-3: Minimal visual content; generic \"the video talks about...\" or option-based logic.
5. 0: No visual grounding; guessing, meta-reasoning only, or missing <think> block.

Input: {input}
Response: {response}

Reply ONLY with JSON like: {{\"score\": int, between 0 and 10, \"rationale\": \"2 to 3 sentences\"}}",
        input = render_input_text(record),
        response = record.response_text,
    )
}

fn consistency_user(question: &str, think: &str, answer: &str) -> String {
    format!(
        "QUESTION:
{question}

THINK (model's internal reasoning):
{think}

ANSWER (model's final answer):
{answer}

TASK:
1) Output ONLY one of the TRUE or FALSE on the first line.
   -- TRUE => THINK and ANSWER are consistent and express the same conclusion.
   -- FALSE => THINK contradicts or does not support the ANSWER (e.g., mismatched conclusion).
2) On the next line(s), give a brief justification (1--3 sentences) summarizing the key evidence supporting your decision."
    )
}

fn decode_for(kind: PromptKind) -> DecodeParams {
    let max_tokens = match kind {
        PromptKind::AnswerFromThink | PromptKind::AnswerFromAnswer => 32,
        PromptKind::VasScore => 300,
        PromptKind::ClaimExtract => 800,
        PromptKind::ConsistencyGate => 200,
    };
    DecodeParams {
        temperature: 0.0,
        max_tokens,
    }
}

/// Renders the template for `kind` over a record and its segmentation.
/// Identical inputs yield byte-identical requests; the MCQ or open-form
/// branch is selected by the presence of options.
pub fn render_prompt(
    kind: PromptKind,
    record: &TraceRecord,
    segment: &SegmentedTrace,
) -> Result<JudgeRequest, JudgeError> {
    let (system_text, user_text) = match kind {
        PromptKind::AnswerFromThink => {
            let think = segment
                .think()
                .ok_or(JudgeError::MissingField { field: "think" })?;
            (
                ANSWER_FROM_THINK_SYSTEM.to_string(),
                answer_extraction_user(record, "Reasoning", think),
            )
        }
        PromptKind::AnswerFromAnswer => {
            let answer = segment
                .answer()
                .ok_or(JudgeError::MissingField { field: "answer" })?;
            (
                ANSWER_FROM_ANSWER_SYSTEM.to_string(),
                answer_extraction_user(record, "Text to parse (final answer snippet)", answer),
            )
        }
        PromptKind::VasScore => (VAS_SYSTEM.to_string(), vas_user(record)),
        PromptKind::ClaimExtract => (
            CLAIM_EXTRACT_SYSTEM.to_string(),
            claim_extract_user(segment.think().unwrap_or_default()),
        ),
        PromptKind::ConsistencyGate => {
            let think = segment
                .think()
                .ok_or(JudgeError::MissingField { field: "think" })?;
            let answer = segment
                .answer()
                .ok_or(JudgeError::MissingField { field: "answer" })?;
            (
                CONSISTENCY_SYSTEM.to_string(),
                consistency_user(&record.question, think, answer),
            )
        }
    };
    Ok(JudgeRequest {
        kind,
        system_text,
        user_text,
        decode: decode_for(kind),
    })
}

/// Claim-extraction request over a bare reasoning string (used for the
/// reference side, where no segmentation exists).
pub fn render_claim_extract(reasoning: &str) -> JudgeRequest {
    JudgeRequest {
        kind: PromptKind::ClaimExtract,
        system_text: CLAIM_EXTRACT_SYSTEM.to_string(),
        user_text: claim_extract_user(reasoning),
        decode: decode_for(PromptKind::ClaimExtract),
    }
}
