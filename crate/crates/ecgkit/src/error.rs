//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! grouped by the stage that raises them; messages carry enough context
//! (lead names, lengths, budgets) to diagnose a failure without a debugger.

use thiserror::Error;

/// Errors raised by record handling, signal processing, assembly and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A required lead is absent from a record or file.
    #[error("missing lead {0}")]
    MissingLead(String),

    /// The same lead appears more than once.
    #[error("duplicate lead {0}")]
    DuplicateLead(String),

    /// A file header could not be parsed (bad magic, version, or field).
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// A file ended before the declared payload was complete.
    #[error("truncated payload: {0}")]
    TruncatedPayload(String),

    /// A sample was NaN or infinite.
    #[error("non-finite sample in lead {lead} at index {index}")]
    NonFiniteSample { lead: String, index: usize },

    /// A record had no leads or no samples.
    #[error("empty record: {0}")]
    EmptyRecord(String),

    /// Sampling frequency was zero, negative, or non-finite.
    #[error("invalid sampling frequency {0} Hz")]
    InvalidSampleRate(f64),

    /// A filter frequency was at or above the Nyquist limit.
    #[error("frequency {freq} Hz is at or above Nyquist ({nyquist} Hz)")]
    FrequencyAboveNyquist { freq: f64, nyquist: f64 },

    /// A band specification was empty or inverted.
    #[error("invalid band ({low} Hz, {high} Hz)")]
    InvalidBand { low: f64, high: f64 },

    /// A signal was too short for the requested operation.
    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    /// Min-max normalization is undefined for a constant record.
    #[error("constant signal: every sample equals {0}")]
    ConstantSignal(f64),

    /// A sample fell outside the normalized range [0, 1].
    #[error("sample {value} out of [0, 1] in lead {lead} at index {index}")]
    SampleOutOfRange { value: f64, lead: String, index: usize },

    /// Training was requested on an empty corpus.
    #[error("empty corpus")]
    EmptyCorpus,

    /// A symbol outside the quantization alphabet was encountered.
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(char),

    /// A token id outside the vocabulary was encountered.
    #[error("unknown token id {0}")]
    UnknownTokenId(u32),

    /// A vocabulary file failed validation.
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),

    /// A conversation contained no turns.
    #[error("conversation has no turns")]
    EmptyConversation,

    /// The first query must contain the signal placeholder exactly once.
    #[error("signal placeholder error: {0}")]
    SignalPlaceholder(String),

    /// The signal token fell outside the sequence budget after truncation.
    #[error("signal token truncated: placeholder at position {position}, budget {budget}")]
    SignalTokenTruncated { position: usize, budget: usize },

    /// The token budget cannot hold the minimum signal allocation and any text.
    #[error(
        "budget infeasible: {signal_tokens} signal tokens (minimum keep {min_signal}) \
         leave no room for text in a budget of {budget}"
    )]
    BudgetInfeasible {
        signal_tokens: usize,
        min_signal: usize,
        budget: usize,
    },

    /// A span referenced positions outside the token sequence.
    #[error("span out of range: start {start} + len {len} exceeds sequence length {total}")]
    SpanOutOfRange {
        start: usize,
        len: usize,
        total: usize,
    },

    /// Two paired sequences had different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Significance testing needs at least two models per table cell.
    #[error("fewer than two models for dataset {dataset}, metric {metric}")]
    FewerThanTwoModels { dataset: String, metric: String },

    /// Models in a table cell were not scored on the same seed set.
    #[error("seed sets differ across models for dataset {dataset}, metric {metric}")]
    MismatchedSeeds { dataset: String, metric: String },

    /// An input collection that must be non-empty was empty.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A configuration or argument value was rejected.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An external scorer file or endpoint misbehaved.
    #[error("external scorer: {0}")]
    ExternalScorer(String),

    /// Text or numeric content failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
