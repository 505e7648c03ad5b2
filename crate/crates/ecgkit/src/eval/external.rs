//! Pluggable external scorers for metrics that need a model or service
//! (e.g. embedding-similarity judges) rather than a closed-form formula.
//!
//! Two transports are provided: [`FileScorer`] reads precomputed scores
//! from an NDJSON file, and [`HttpScorer`] posts candidate/reference pairs
//! to a scoring endpoint. Both must return exactly one finite score per
//! pair, in order.

use std::io::Read;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One candidate/reference pair awaiting a score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreRequest<'a> {
    pub candidate: &'a str,
    pub reference: &'a str,
}

#[derive(Debug, Deserialize)]
struct ScoreLine {
    score: f64,
}

/// Anything that can score candidate/reference pairs in bulk.
pub trait PairScorer {
    /// Return one score per pair, aligned by index.
    fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>>;
}

fn parse_score_lines(text: &str, expected: usize, source: &str) -> Result<Vec<f64>> {
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ScoreLine = serde_json::from_str(line).map_err(|e| {
            Error::ExternalScorer(format!("{source} line {}: {e}", lineno + 1))
        })?;
        if !parsed.score.is_finite() {
            return Err(Error::ExternalScorer(format!(
                "{source} line {}: non-finite score",
                lineno + 1
            )));
        }
        scores.push(parsed.score);
    }
    if scores.len() != expected {
        return Err(Error::ExternalScorer(format!(
            "{source}: expected {expected} scores, found {}",
            scores.len()
        )));
    }
    Ok(scores)
}

/// Reads scores that were computed offline, one NDJSON object
/// `{"score": <f64>}` per pair, in pair order.
#[derive(Debug, Clone)]
pub struct FileScorer {
    pub path: PathBuf,
}

impl PairScorer for FileScorer {
    fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>> {
        let text = std::fs::read_to_string(&self.path)?;
        parse_score_lines(&text, pairs.len(), &self.path.display().to_string())
    }
}

/// Posts pairs as NDJSON `{"candidate", "reference"}` lines to an HTTP
/// endpoint and expects NDJSON `{"score"}` lines back, one per pair.
#[derive(Debug, Clone)]
pub struct HttpScorer {
    pub endpoint: String,
}

impl PairScorer for HttpScorer {
    fn score_pairs(&self, pairs: &[(String, String)]) -> Result<Vec<f64>> {
        let mut body = String::new();
        for (candidate, reference) in pairs {
            let line = serde_json::to_string(&ScoreRequest {
                candidate,
                reference,
            })
            .map_err(|e| Error::ExternalScorer(format!("encode request: {e}")))?;
            body.push_str(&line);
            body.push('\n');
        }
        let response = ureq::post(&self.endpoint)
            .set("content-type", "application/x-ndjson")
            .send_string(&body)
            .map_err(|e| Error::ExternalScorer(format!("{}: {e}", self.endpoint)))?;
        let mut text = String::new();
        response
            .into_reader()
            .read_to_string(&mut text)
            .map_err(|e| Error::ExternalScorer(format!("{}: read body: {e}", self.endpoint)))?;
        parse_score_lines(&text, pairs.len(), &self.endpoint)
    }
}
