//! Conversation assembly: chat-template rendering, signal insertion, budget
//! truncation, left-padding, and target-label masking.
//!
//! A [`Conversation`] (optional system prompt plus query/response turns, with
//! the `<signal>` placeholder in the first query block) is rendered through
//! one of three instruction-tuned chat templates, tokenized, and packed into
//! a fixed-length training sample:
//!
//! * **latent mode** ([`assemble_latent`]): the signal occupies a single
//!   `<signal>` token position, to be swapped for a projected embedding
//!   downstream. Sequences longer than the budget keep their *first* `T`
//!   tokens; shorter ones are left-padded.
//! * **tokenized mode** ([`assemble_tokenized`]): the placeholder is spliced
//!   out and replaced by the signal's BPE token ids. The budget arithmetic
//!   keeps `k = min(s, max(min_signal, T - x))` signal tokens, truncates
//!   text from the end of the sequence when `k + x > T`, and left-pads when
//!   room remains, so the result is always exactly `T` long.
//!
//! Labels copy a token id only where the token belongs to an assistant
//! response or is the end-of-turn token that closes one; every other
//! position — padding, control tokens, system text, queries — is masked
//! with −100.

use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::TokenSequence;

/// Placeholder that marks where the signal enters the first query.
pub const SIGNAL_PLACEHOLDER: &str = "<signal>";

/// Pad token string used by the reference tokenizer.
pub const PAD_STRING: &str = "<pad>";

/// Label value that excludes a position from the loss.
pub const LABEL_IGNORE: i64 = -100;

/// Minimum number of signal tokens kept by the tokenized path.
pub const DEFAULT_MIN_SIGNAL: usize = 500;

/// Default system prompt for templates that accept one.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You are an expert multimodal assistant capable of \
processing both natural language text and ECG signals. When you receive input, first determine \
if it is text, ECG data, or both. For ECG signals, interpret them as time-series data \
representing cardiac activity\u{2014}analyzing features such as heart rate, rhythm, and potential \
abnormalities. When both modalities are present, synthesize the information to provide \
integrated, expert cardiac electrophysiologist-level responses. Your answers should be precise, \
concise, and informed by clinical signal analysis and natural language understanding. \
Additionally, if the user asks a general question, you should answer it as a general assistant.";

/// One query/response exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(rename = "q")]
    pub query: String,
    #[serde(rename = "s")]
    pub response: String,
}

/// A multi-turn conversation grounded in one signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conversation {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_ref: Option<String>,
}

/// Supported chat templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatTemplate {
    Llama32,
    Gemma2,
    Qwen25,
}

impl ChatTemplate {
    pub fn name(&self) -> &'static str {
        match self {
            ChatTemplate::Llama32 => "llama32",
            ChatTemplate::Gemma2 => "gemma2",
            ChatTemplate::Qwen25 => "qwen25",
        }
    }

    /// Whether the template carries a system message (Gemma 2 does not).
    pub fn has_system(&self) -> bool {
        !matches!(self, ChatTemplate::Gemma2)
    }

    /// The end-of-turn control string.
    pub fn eot(&self) -> &'static str {
        match self {
            ChatTemplate::Llama32 => "<|eot_id|>",
            ChatTemplate::Gemma2 => "<end_of_turn>",
            ChatTemplate::Qwen25 => "<|im_end|>",
        }
    }

    /// Every control string the tokenizer must treat as atomic.
    pub fn special_strings(&self) -> Vec<&'static str> {
        let mut strings = vec![PAD_STRING, SIGNAL_PLACEHOLDER];
        strings.extend(match self {
            ChatTemplate::Llama32 => vec![
                "<|begin_of_text|>",
                "<|start_header_id|>",
                "<|end_header_id|>",
                "<|eot_id|>",
            ],
            ChatTemplate::Gemma2 => vec!["<bos>", "<start_of_turn>", "<end_of_turn>"],
            ChatTemplate::Qwen25 => vec!["<|im_start|>", "<|im_end|>"],
        });
        strings
    }
}

impl FromStr for ChatTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "llama32" => Ok(ChatTemplate::Llama32),
            "gemma2" => Ok(ChatTemplate::Gemma2),
            "qwen25" => Ok(ChatTemplate::Qwen25),
            other => Err(Error::InvalidParameter(format!(
                "unknown template {other:?} (expected llama32, gemma2, or qwen25)"
            ))),
        }
    }
}

/// What a rendered piece of text contributes to the final sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Control tokens, headers, system text, queries — always masked.
    Chrome,
    /// Assistant response text — labeled.
    Response,
    /// The end-of-turn token closing an assistant response — labeled.
    ResponseEot,
    /// The signal placeholder.
    Signal,
}

/// A contiguous span of rendered text with one role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
}

fn seg(kind: SegmentKind, text: impl Into<String>) -> Segment {
    Segment {
        kind,
        text: text.into(),
    }
}

fn validate_placeholders(conv: &Conversation) -> Result<()> {
    if conv.turns.is_empty() {
        return Err(Error::EmptyConversation);
    }
    if let Some(system) = &conv.system {
        if system.contains(SIGNAL_PLACEHOLDER) {
            return Err(Error::SignalPlaceholder(
                "placeholder not allowed in the system prompt".into(),
            ));
        }
    }
    for (i, turn) in conv.turns.iter().enumerate() {
        let in_query = turn.query.matches(SIGNAL_PLACEHOLDER).count();
        let in_response = turn.response.matches(SIGNAL_PLACEHOLDER).count();
        if in_response > 0 {
            return Err(Error::SignalPlaceholder(format!(
                "placeholder not allowed in turn {} response",
                i + 1
            )));
        }
        if i == 0 {
            if in_query > 1 {
                return Err(Error::SignalPlaceholder(format!(
                    "placeholder appears {in_query} times in the first query"
                )));
            }
        } else if in_query > 0 {
            return Err(Error::SignalPlaceholder(format!(
                "placeholder not allowed in turn {} query",
                i + 1
            )));
        }
    }
    Ok(())
}

/// First-query content as segments: the placeholder becomes its own
/// [`SegmentKind::Signal`] segment, prepended on its own line when absent.
fn first_query_segments(query: &str, out: &mut Vec<Segment>) {
    match query.find(SIGNAL_PLACEHOLDER) {
        Some(at) => {
            if at > 0 {
                out.push(seg(SegmentKind::Chrome, &query[..at]));
            }
            out.push(seg(SegmentKind::Signal, SIGNAL_PLACEHOLDER));
            let rest = &query[at + SIGNAL_PLACEHOLDER.len()..];
            if !rest.is_empty() {
                out.push(seg(SegmentKind::Chrome, rest));
            }
        }
        None => {
            out.push(seg(SegmentKind::Signal, SIGNAL_PLACEHOLDER));
            out.push(seg(SegmentKind::Chrome, "\n"));
            if !query.is_empty() {
                out.push(seg(SegmentKind::Chrome, query));
            }
        }
    }
}

/// Render a conversation as role-tagged segments in template order.
pub fn render_segments(conv: &Conversation, template: ChatTemplate) -> Result<Vec<Segment>> {
    validate_placeholders(conv)?;
    let system = if template.has_system() {
        Some(
            conv.system
                .clone()
                .unwrap_or_else(|| DEFAULT_SYSTEM_PROMPT.to_string()),
        )
    } else {
        if conv.system.is_some() {
            log::warn!(
                "conversation {}: template {} has no system slot; dropping the supplied system prompt",
                conv.id,
                template.name()
            );
        }
        None
    };

    let mut out = Vec::new();
    match template {
        ChatTemplate::Llama32 => {
            let header = |out: &mut Vec<Segment>, role: &str| {
                out.push(seg(SegmentKind::Chrome, "<|start_header_id|>"));
                out.push(seg(SegmentKind::Chrome, role));
                out.push(seg(SegmentKind::Chrome, "<|end_header_id|>"));
                out.push(seg(SegmentKind::Chrome, "\n\n"));
            };
            out.push(seg(SegmentKind::Chrome, "<|begin_of_text|>"));
            if let Some(system) = &system {
                header(&mut out, "system");
                out.push(seg(SegmentKind::Chrome, system));
                out.push(seg(SegmentKind::Chrome, "<|eot_id|>"));
            }
            for (i, turn) in conv.turns.iter().enumerate() {
                header(&mut out, "user");
                if i == 0 {
                    first_query_segments(&turn.query, &mut out);
                } else if !turn.query.is_empty() {
                    out.push(seg(SegmentKind::Chrome, &turn.query));
                }
                out.push(seg(SegmentKind::Chrome, "<|eot_id|>"));
                header(&mut out, "assistant");
                if !turn.response.is_empty() {
                    out.push(seg(SegmentKind::Response, &turn.response));
                }
                out.push(seg(SegmentKind::ResponseEot, "<|eot_id|>"));
            }
        }
        ChatTemplate::Gemma2 => {
            let open = |out: &mut Vec<Segment>, role: &str| {
                out.push(seg(SegmentKind::Chrome, "<start_of_turn>"));
                out.push(seg(SegmentKind::Chrome, role));
                out.push(seg(SegmentKind::Chrome, "\n"));
            };
            out.push(seg(SegmentKind::Chrome, "<bos>"));
            for (i, turn) in conv.turns.iter().enumerate() {
                open(&mut out, "user");
                if i == 0 {
                    first_query_segments(&turn.query, &mut out);
                } else if !turn.query.is_empty() {
                    out.push(seg(SegmentKind::Chrome, &turn.query));
                }
                out.push(seg(SegmentKind::Chrome, "<end_of_turn>"));
                out.push(seg(SegmentKind::Chrome, "\n"));
                open(&mut out, "model");
                if !turn.response.is_empty() {
                    out.push(seg(SegmentKind::Response, &turn.response));
                }
                out.push(seg(SegmentKind::ResponseEot, "<end_of_turn>"));
                out.push(seg(SegmentKind::Chrome, "\n"));
            }
        }
        ChatTemplate::Qwen25 => {
            let open = |out: &mut Vec<Segment>, role: &str| {
                out.push(seg(SegmentKind::Chrome, "<|im_start|>"));
                out.push(seg(SegmentKind::Chrome, role));
                out.push(seg(SegmentKind::Chrome, "\n"));
            };
            if let Some(system) = &system {
                open(&mut out, "system");
                out.push(seg(SegmentKind::Chrome, system));
                out.push(seg(SegmentKind::Chrome, "<|im_end|>"));
                out.push(seg(SegmentKind::Chrome, "\n"));
            }
            for (i, turn) in conv.turns.iter().enumerate() {
                open(&mut out, "user");
                if i == 0 {
                    first_query_segments(&turn.query, &mut out);
                } else if !turn.query.is_empty() {
                    out.push(seg(SegmentKind::Chrome, &turn.query));
                }
                out.push(seg(SegmentKind::Chrome, "<|im_end|>"));
                out.push(seg(SegmentKind::Chrome, "\n"));
                open(&mut out, "assistant");
                if !turn.response.is_empty() {
                    out.push(seg(SegmentKind::Response, &turn.response));
                }
                out.push(seg(SegmentKind::ResponseEot, "<|im_end|>"));
                out.push(seg(SegmentKind::Chrome, "\n"));
            }
        }
    }
    Ok(out)
}

/// Render a conversation to its full control-token string.
pub fn render_template(conv: &Conversation, template: ChatTemplate) -> Result<String> {
    let segments = render_segments(conv, template)?;
    Ok(segments.into_iter().map(|s| s.text).collect())
}

/// Minimal tokenizer interface the assembly stage needs.
pub trait TextTokenizer {
    /// Split text into token ids. Special strings are atomic.
    fn encode(&self, text: &str) -> Vec<u32>;
    /// Exact inverse of [`TextTokenizer::encode`].
    fn decode(&self, ids: &[u32]) -> Result<String>;
    fn pad_id(&self) -> u32;
    fn eot_id(&self) -> u32;
    fn signal_id(&self) -> u32;
}

struct InternerState {
    by_string: std::collections::HashMap<String, u32>,
    strings: Vec<String>,
}

/// Reference tokenizer: template control strings are atomic; everything else
/// splits into alternating whitespace and non-whitespace runs, interned in
/// first-seen order. `decode(encode(x)) == x` for any `x`.
pub struct WhitespaceTokenizer {
    specials: Vec<String>,
    pad: u32,
    eot: u32,
    signal: u32,
    state: Mutex<InternerState>,
}

impl WhitespaceTokenizer {
    /// Build a tokenizer whose specials match one chat template.
    pub fn for_template(template: ChatTemplate) -> Self {
        let specials: Vec<String> = template
            .special_strings()
            .into_iter()
            .map(String::from)
            .collect();
        let mut by_string = std::collections::HashMap::new();
        for (i, s) in specials.iter().enumerate() {
            by_string.insert(s.clone(), i as u32);
        }
        let pad = by_string[PAD_STRING];
        let signal = by_string[SIGNAL_PLACEHOLDER];
        let eot = by_string[template.eot()];
        WhitespaceTokenizer {
            pad,
            eot,
            signal,
            state: Mutex::new(InternerState {
                by_string,
                strings: specials.clone(),
            }),
            specials,
        }
    }

    fn intern(&self, token: &str) -> u32 {
        let mut state = self.state.lock().unwrap();
        if let Some(&id) = state.by_string.get(token) {
            return id;
        }
        let id = state.strings.len() as u32;
        state.strings.push(token.to_string());
        state.by_string.insert(token.to_string(), id);
        id
    }

    /// Longest special string starting at `text[at..]`, if any.
    fn special_at(&self, text: &str, at: usize) -> Option<&str> {
        self.specials
            .iter()
            .filter(|s| text[at..].starts_with(s.as_str()))
            .max_by_key(|s| s.len())
            .map(|s| s.as_str())
    }
}

impl TextTokenizer for WhitespaceTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        let mut at = 0;
        while at < text.len() {
            if let Some(special) = self.special_at(text, at) {
                let len = special.len();
                ids.push(self.intern(special));
                at += len;
                continue;
            }
            let rest = &text[at..];
            let first = rest.chars().next().unwrap();
            let want_ws = first.is_whitespace();
            let mut end = at;
            for (off, ch) in rest.char_indices() {
                if ch.is_whitespace() != want_ws || self.special_at(text, at + off).is_some() {
                    break;
                }
                end = at + off + ch.len_utf8();
            }
            ids.push(self.intern(&text[at..end]));
            at = end;
        }
        ids
    }

    fn decode(&self, ids: &[u32]) -> Result<String> {
        let state = self.state.lock().unwrap();
        let mut out = String::new();
        for &id in ids {
            let token = state
                .strings
                .get(id as usize)
                .ok_or(Error::UnknownTokenId(id))?;
            out.push_str(token);
        }
        Ok(out)
    }

    fn pad_id(&self) -> u32 {
        self.pad
    }

    fn eot_id(&self) -> u32 {
        self.eot
    }

    fn signal_id(&self) -> u32 {
        self.signal
    }
}

/// A fixed-length training sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledSample {
    pub id: String,
    pub template: String,
    /// Exactly `T` token ids; signal ids live in their own id space.
    pub tokens: Vec<u32>,
    /// Exactly `T` values: the token id where supervised, −100 elsewhere.
    pub labels: Vec<i64>,
    /// `(start, len)` of the signal tokens; `len == 1` in latent mode.
    pub signal_span: (usize, usize),
    /// Number of left pads (always a prefix).
    pub pad_count: usize,
    /// True when no supervised position survived truncation.
    pub degenerate: bool,
}

/// Copy token ids inside response spans and at their end-of-turn positions;
/// mask everything else with −100.
pub fn build_labels(
    tokens: &[u32],
    response_spans: &[(usize, usize)],
    eot_positions: &[usize],
) -> Result<Vec<i64>> {
    let total = tokens.len();
    let mut labels = vec![LABEL_IGNORE; total];
    for &(start, len) in response_spans {
        if start + len > total {
            return Err(Error::SpanOutOfRange { start, len, total });
        }
        for t in start..start + len {
            labels[t] = tokens[t] as i64;
        }
    }
    for &pos in eot_positions {
        if pos >= total {
            return Err(Error::SpanOutOfRange {
                start: pos,
                len: 1,
                total,
            });
        }
        labels[pos] = tokens[pos] as i64;
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenRole {
    Chrome,
    Response,
    ResponseEot,
    Signal,
    Pad,
}

/// Tokenize segments, tagging every token with its segment's role.
fn tokenize_segments(
    segments: &[Segment],
    tokenizer: &dyn TextTokenizer,
) -> (Vec<u32>, Vec<TokenRole>) {
    let mut tokens = Vec::new();
    let mut roles = Vec::new();
    for segment in segments {
        let ids = tokenizer.encode(&segment.text);
        let role = match segment.kind {
            SegmentKind::Chrome => TokenRole::Chrome,
            SegmentKind::Response => TokenRole::Response,
            SegmentKind::ResponseEot => TokenRole::ResponseEot,
            SegmentKind::Signal => TokenRole::Signal,
        };
        roles.extend(std::iter::repeat(role).take(ids.len()));
        tokens.extend(ids);
    }
    (tokens, roles)
}

/// Derive response spans and response-closing eot positions from roles.
fn spans_from_roles(roles: &[TokenRole]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut spans = Vec::new();
    let mut eots = Vec::new();
    let mut open: Option<usize> = None;
    for (t, role) in roles.iter().enumerate() {
        match role {
            TokenRole::Response => {
                if open.is_none() {
                    open = Some(t);
                }
            }
            other => {
                if let Some(start) = open.take() {
                    spans.push((start, t - start));
                }
                if *other == TokenRole::ResponseEot {
                    eots.push(t);
                }
            }
        }
    }
    if let Some(start) = open {
        spans.push((start, roles.len() - start));
    }
    (spans, eots)
}

fn finish_sample(
    conv: &Conversation,
    template: ChatTemplate,
    tokens: Vec<u32>,
    roles: Vec<TokenRole>,
) -> Result<AssembledSample> {
    let (spans, eots) = spans_from_roles(&roles);
    let labels = build_labels(&tokens, &spans, &eots)?;
    let degenerate = labels.iter().all(|&l| l == LABEL_IGNORE);
    if degenerate {
        log::warn!(
            "conversation {}: no supervised tokens survived the budget",
            conv.id
        );
    }
    let signal_start = roles.iter().position(|&r| r == TokenRole::Signal);
    let signal_len = roles.iter().filter(|&&r| r == TokenRole::Signal).count();
    let pad_count = roles
        .iter()
        .take_while(|&&r| r == TokenRole::Pad)
        .count();
    Ok(AssembledSample {
        id: conv.id.clone(),
        template: template.name().to_string(),
        tokens,
        labels,
        signal_span: (signal_start.unwrap_or(0), signal_len),
        pad_count,
        degenerate,
    })
}

fn check_budget(budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::InvalidParameter(
            "token budget must be positive".into(),
        ));
    }
    Ok(())
}

/// Assemble with the signal as a single placeholder token.
///
/// Over-long sequences keep their first `budget` tokens; if that cuts off
/// the placeholder the sample cannot represent the signal and
/// [`Error::SignalTokenTruncated`] is returned.
pub fn assemble_latent(
    conv: &Conversation,
    template: ChatTemplate,
    tokenizer: &dyn TextTokenizer,
    budget: usize,
) -> Result<AssembledSample> {
    check_budget(budget)?;
    let segments = render_segments(conv, template)?;
    let (mut tokens, mut roles) = tokenize_segments(&segments, tokenizer);
    if tokens.len() > budget {
        if let Some(pos) = roles.iter().position(|&r| r == TokenRole::Signal) {
            if pos >= budget {
                return Err(Error::SignalTokenTruncated {
                    position: pos,
                    budget,
                });
            }
        }
        tokens.truncate(budget);
        roles.truncate(budget);
    } else if tokens.len() < budget {
        let pads = budget - tokens.len();
        tokens.splice(0..0, std::iter::repeat(tokenizer.pad_id()).take(pads));
        roles.splice(0..0, std::iter::repeat(TokenRole::Pad).take(pads));
    }
    finish_sample(conv, template, tokens, roles)
}

/// Number of text tokens (everything except the signal) the rendered
/// conversation occupies. This is the `x` in the budget arithmetic.
pub fn count_text_tokens(
    conv: &Conversation,
    template: ChatTemplate,
    tokenizer: &dyn TextTokenizer,
) -> Result<usize> {
    let segments = render_segments(conv, template)?;
    let (_, roles) = tokenize_segments(&segments, tokenizer);
    Ok(roles.iter().filter(|&&r| r != TokenRole::Signal).count())
}

/// Assemble with the signal expanded into its BPE token ids.
///
/// With `s` signal tokens and `x` text tokens, keeps
/// `k = min(s, max(min_signal, budget - x))` signal tokens (the first `k`),
/// then truncates text from the end of the sequence until everything fits,
/// then left-pads any remaining room.
pub fn assemble_tokenized(
    conv: &Conversation,
    template: ChatTemplate,
    tokenizer: &dyn TextTokenizer,
    signal: &TokenSequence,
    budget: usize,
    min_signal: usize,
) -> Result<AssembledSample> {
    check_budget(budget)?;
    let s = signal.ids.len();
    if s.min(min_signal) >= budget {
        return Err(Error::BudgetInfeasible {
            signal_tokens: s,
            min_signal,
            budget,
        });
    }
    let segments = render_segments(conv, template)?;
    let (seg_tokens, seg_roles) = tokenize_segments(&segments, tokenizer);
    let x = seg_roles
        .iter()
        .filter(|&&r| r != TokenRole::Signal)
        .count();
    let keep = s.min(min_signal.max(budget.saturating_sub(x)));

    // Splice the kept signal ids over the placeholder position.
    let mut tokens = Vec::with_capacity(x + keep);
    let mut roles = Vec::with_capacity(x + keep);
    for (token, role) in seg_tokens.into_iter().zip(seg_roles) {
        if role == TokenRole::Signal {
            tokens.extend_from_slice(&signal.ids[..keep]);
            roles.extend(std::iter::repeat(TokenRole::Signal).take(keep));
        } else {
            tokens.push(token);
            roles.push(role);
        }
    }

    if tokens.len() > budget {
        // Drop text tokens from the end; if the tail reaches back into the
        // signal, continue dropping the text immediately before it.
        let mut drop = tokens.len() - budget;
        let signal_end = roles
            .iter()
            .rposition(|&r| r == TokenRole::Signal)
            .map(|p| p + 1)
            .unwrap_or(0);
        let post = tokens.len() - signal_end;
        let drop_post = drop.min(post);
        tokens.truncate(tokens.len() - drop_post);
        roles.truncate(roles.len() - drop_post);
        drop -= drop_post;
        if drop > 0 {
            let signal_start = signal_end - keep;
            tokens.drain(signal_start - drop..signal_start);
            roles.drain(signal_start - drop..signal_start);
        }
    } else if tokens.len() < budget {
        let pads = budget - tokens.len();
        tokens.splice(0..0, std::iter::repeat(tokenizer.pad_id()).take(pads));
        roles.splice(0..0, std::iter::repeat(TokenRole::Pad).take(pads));
    }
    finish_sample(conv, template, tokens, roles)
}

/// Read line-delimited conversations (blank lines skipped).
pub fn read_conversations<R: Read>(reader: R) -> Result<Vec<Conversation>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let conv: Conversation = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("conversation line {}: {e}", lineno + 1)))?;
        out.push(conv);
    }
    Ok(out)
}

/// Write one conversation per line.
pub fn write_conversations<W: Write>(conversations: &[Conversation], mut writer: W) -> Result<()> {
    for conv in conversations {
        serde_json::to_writer(&mut writer, conv)
            .map_err(|e| Error::Parse(format!("serializing conversation: {e}")))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Write one assembled sample per line.
pub fn write_samples<W: Write>(samples: &[AssembledSample], mut writer: W) -> Result<()> {
    for sample in samples {
        serde_json::to_writer(&mut writer, sample)
            .map_err(|e| Error::Parse(format!("serializing sample: {e}")))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Read samples written by [`write_samples`].
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<AssembledSample>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: AssembledSample = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("sample line {}: {e}", lineno + 1)))?;
        out.push(sample);
    }
    Ok(out)
}
