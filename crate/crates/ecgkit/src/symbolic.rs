//! Symbolic ECG representation: quantization and byte-pair encoding.
//!
//! Normalized records are mapped to a 26-letter alphabet by uniform
//! quantization of `[0, 1]` (`bin = min(floor(x * 26), 25)`, rendered as
//! `'a' + bin`), flattened lead-major. A byte-pair-encoding vocabulary is
//! then trained on a symbol corpus: each round counts adjacent token pairs
//! across all sequences, merges the most frequent pair into a new token, and
//! stops after `num_merges` rounds or when no pair occurs at least twice.
//! Ties are broken by lexicographic order of the pair's (left, right) token
//! strings. Replacement within a sequence is left-to-right and
//! non-overlapping, so `aaa` resolves to one merged token plus a leftover
//! `a`.
//!
//! Training is deterministic for a fixed corpus — identical results for any
//! thread count — because pair counts are exact integers and the selection
//! order is a strict total order independent of map iteration order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{EcgRecord, Lead};

/// Number of base symbols (letters `a` through `z`).
pub const ALPHABET_SIZE: usize = 26;

/// The quantization alphabet in bin order.
pub const ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz";

/// A quantized record: flattened symbols plus the shape metadata needed to
/// reconstruct the `C x L` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    symbols: Vec<u8>,
    leads: Vec<Lead>,
    samples_per_lead: usize,
    fs: f64,
}

impl SymbolSequence {
    /// Build a sequence, validating alphabet membership and shape.
    pub fn new(
        symbols: Vec<u8>,
        leads: Vec<Lead>,
        samples_per_lead: usize,
        fs: f64,
    ) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput("symbol sequence".into()));
        }
        if symbols.len() != leads.len() * samples_per_lead {
            return Err(Error::LengthMismatch {
                left: symbols.len(),
                right: leads.len() * samples_per_lead,
            });
        }
        if let Some(&bad) = symbols.iter().find(|b| !b.is_ascii_lowercase()) {
            return Err(Error::UnknownSymbol(bad as char));
        }
        Ok(SymbolSequence {
            symbols,
            leads,
            samples_per_lead,
            fs,
        })
    }

    /// A free-standing sequence without record provenance (single row).
    pub fn from_text(text: &str) -> Result<Self> {
        SymbolSequence::new(text.as_bytes().to_vec(), vec![Lead::I], text.len(), 1.0)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn as_str(&self) -> &str {
        // Constructor guarantees ASCII lowercase.
        std::str::from_utf8(&self.symbols).unwrap()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn samples_per_lead(&self) -> usize {
        self.samples_per_lead
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }
}

/// A BPE-encoded sequence with the same shape metadata as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub leads: Vec<Lead>,
    pub samples_per_lead: usize,
    pub fs: f64,
}

/// Quantize a normalized record into symbols (lead-major flattening).
///
/// Every sample must already lie in `[0, 1]` (see
/// [`crate::preprocess::normalize_record`]); out-of-range samples error with
/// [`Error::SampleOutOfRange`]. Bin `b` covers `[b/26, (b+1)/26)` except the
/// last, which also includes 1.0.
pub fn quantize(record: &EcgRecord) -> Result<SymbolSequence> {
    let mut symbols = Vec::with_capacity(record.num_leads() * record.samples_per_lead());
    for (lead, row) in record.leads().iter().zip(record.rows()) {
        for (index, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::SampleOutOfRange {
                    value: v,
                    lead: lead.name().to_string(),
                    index,
                });
            }
            let bin = ((v * ALPHABET_SIZE as f64).floor() as usize).min(ALPHABET_SIZE - 1);
            symbols.push(b'a' + bin as u8);
        }
    }
    SymbolSequence::new(
        symbols,
        record.leads().to_vec(),
        record.samples_per_lead(),
        record.fs(),
    )
}

/// Reconstruct a record from symbols using bin centers `(b + 0.5) / 26`.
///
/// The absolute reconstruction error is at most half a bin width (1/52) per
/// sample, and re-quantizing the result reproduces the input symbols.
pub fn dequantize(sequence: &SymbolSequence) -> Result<EcgRecord> {
    let l = sequence.samples_per_lead();
    let rows: Vec<Vec<f64>> = sequence
        .symbols()
        .chunks(l)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&b| ((b - b'a') as f64 + 0.5) / ALPHABET_SIZE as f64)
                .collect()
        })
        .collect();
    EcgRecord::new(sequence.leads().to_vec(), sequence.fs(), rows)
}

/// Byte-pair-encoding training parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpeTrainConfig {
    /// Maximum number of merge rounds.
    pub num_merges: usize,
    /// Offset added to every emitted token id (for embedding-table packing).
    pub id_offset: u32,
}

impl Default for BpeTrainConfig {
    fn default() -> Self {
        BpeTrainConfig {
            num_merges: 5000,
            id_offset: 0,
        }
    }
}

/// A trained BPE vocabulary: 26 base tokens plus one token per merge.
#[derive(Debug, Clone, PartialEq)]
pub struct BpeVocab {
    id_offset: u32,
    /// Merge rules in training order, as internal (0-based) token ids.
    merges: Vec<(u32, u32)>,
    /// Expansion of each internal token id into base symbols.
    token_strings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    alphabet: String,
    id_offset: u32,
    merges: Vec<(u32, u32)>,
}

impl BpeVocab {
    fn from_merges(id_offset: u32, merges: Vec<(u32, u32)>) -> Result<Self> {
        let mut token_strings: Vec<String> =
            ALPHABET.chars().map(|c| c.to_string()).collect();
        for (i, &(left, right)) in merges.iter().enumerate() {
            let limit = (ALPHABET_SIZE + i) as u32;
            if left >= limit || right >= limit {
                return Err(Error::InvalidVocab(format!(
                    "merge {i} references token {} before its definition",
                    left.max(right)
                )));
            }
            let joined =
                format!("{}{}", token_strings[left as usize], token_strings[right as usize]);
            token_strings.push(joined);
        }
        Ok(BpeVocab {
            id_offset,
            merges,
            token_strings,
        })
    }

    /// Total vocabulary size: 26 + number of merges.
    pub fn size(&self) -> usize {
        ALPHABET_SIZE + self.merges.len()
    }

    pub fn id_offset(&self) -> u32 {
        self.id_offset
    }

    /// Merge rules in training order (internal ids, offset not applied).
    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Base-symbol expansion of an (external) token id.
    pub fn token_string(&self, id: u32) -> Result<&str> {
        let internal = id
            .checked_sub(self.id_offset)
            .ok_or(Error::UnknownTokenId(id))?;
        self.token_strings
            .get(internal as usize)
            .map(|s| s.as_str())
            .ok_or(Error::UnknownTokenId(id))
    }

    /// Serialize as versioned JSON (`{version, alphabet, id_offset, merges}`).
    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        let file = VocabFile {
            version: 1,
            alphabet: ALPHABET.to_string(),
            id_offset: self.id_offset,
            merges: self.merges.clone(),
        };
        serde_json::to_writer_pretty(writer, &file)
            .map_err(|e| Error::Parse(format!("writing vocabulary: {e}")))
    }

    /// Load and validate a vocabulary written by [`BpeVocab::save`].
    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let file: VocabFile = serde_json::from_reader(reader)
            .map_err(|e| Error::InvalidVocab(e.to_string()))?;
        if file.version != 1 {
            return Err(Error::InvalidVocab(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if file.alphabet != ALPHABET {
            return Err(Error::InvalidVocab("unexpected alphabet".into()));
        }
        BpeVocab::from_merges(file.id_offset, file.merges)
    }
}

fn base_ids(sequence: &SymbolSequence) -> Vec<u32> {
    sequence.symbols().iter().map(|&b| (b - b'a') as u32).collect()
}

/// Replace every left-to-right non-overlapping occurrence of `pair`.
fn replace_pair(seq: &[u32], pair: (u32, u32), new_id: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == pair.0 && seq[i + 1] == pair.1 {
            out.push(new_id);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    out
}

fn local_pair_counts(seq: &[u32]) -> HashMap<(u32, u32), i64> {
    let mut counts = HashMap::new();
    for w in seq.windows(2) {
        *counts.entry((w[0], w[1])).or_insert(0) += 1;
    }
    counts
}

/// Train a BPE vocabulary on a symbol corpus.
///
/// Pair frequencies are counted over adjacent positions within each
/// sequence (never across sequence boundaries). Each round merges the most
/// frequent pair — ties resolved by lexicographic (left string, right
/// string), then by token ids — and stops early once no pair occurs at
/// least twice.
pub fn train_bpe(corpus: &[SymbolSequence], config: &BpeTrainConfig) -> Result<BpeVocab> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut sequences: Vec<Vec<u32>> = corpus.par_iter().map(base_ids).collect();
    let mut token_strings: Vec<String> = ALPHABET.chars().map(|c| c.to_string()).collect();
    let mut merges: Vec<(u32, u32)> = Vec::new();

    // Global pair counts plus, per pair, the set of sequences containing it,
    // so a merge only revisits sequences it can change.
    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut members: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    let locals: Vec<HashMap<(u32, u32), i64>> =
        sequences.par_iter().map(|s| local_pair_counts(s)).collect();
    for (seq_id, local) in locals.iter().enumerate() {
        for (&pair, &count) in local {
            *counts.entry(pair).or_insert(0) += count;
            members.entry(pair).or_default().push(seq_id);
        }
    }

    while merges.len() < config.num_merges {
        let best = counts
            .iter()
            .filter(|(_, &count)| count >= 2)
            .min_by(|(pa, ca), (pb, cb)| {
                cb.cmp(ca) // highest count first
                    .then_with(|| {
                        let ka = (&token_strings[pa.0 as usize], &token_strings[pa.1 as usize]);
                        let kb = (&token_strings[pb.0 as usize], &token_strings[pb.1 as usize]);
                        ka.cmp(&kb)
                    })
                    .then(pa.cmp(pb))
            })
            .map(|(&pair, _)| pair);
        let Some(pair) = best else { break };

        let new_id = token_strings.len() as u32;
        token_strings.push(format!(
            "{}{}",
            token_strings[pair.0 as usize], token_strings[pair.1 as usize]
        ));
        merges.push(pair);

        let affected = members.remove(&pair).unwrap_or_default();
        // Rewrite affected sequences in parallel; count updates are integer
        // sums, so the apply order cannot change the result.
        let rewrites: Vec<(usize, Vec<u32>, HashMap<(u32, u32), i64>, HashMap<(u32, u32), i64>)> =
            affected
                .par_iter()
                .filter(|&&seq_id| sequences[seq_id].windows(2).any(|w| (w[0], w[1]) == pair))
                .map(|&seq_id| {
                    let old = &sequences[seq_id];
                    let old_counts = local_pair_counts(old);
                    let new_seq = replace_pair(old, pair, new_id);
                    let new_counts = local_pair_counts(&new_seq);
                    (seq_id, new_seq, old_counts, new_counts)
                })
                .collect();
        for (seq_id, new_seq, old_counts, new_counts) in rewrites {
            for (&p, &c) in &old_counts {
                let slot = counts.get_mut(&p).unwrap();
                *slot -= c;
                if *slot == 0 {
                    counts.remove(&p);
                }
            }
            for (&p, &c) in &new_counts {
                *counts.entry(p).or_insert(0) += c;
                if !old_counts.contains_key(&p) {
                    members.entry(p).or_default().push(seq_id);
                }
            }
            sequences[seq_id] = new_seq;
        }
    }

    BpeVocab::from_merges(config.id_offset, merges)
}

/// Encode symbols by applying the vocabulary's merges in training order,
/// one full left-to-right pass per merge.
pub fn encode(sequence: &SymbolSequence, vocab: &BpeVocab) -> Result<TokenSequence> {
    let mut ids = base_ids(sequence);
    for (k, &pair) in vocab.merges().iter().enumerate() {
        let new_id = (ALPHABET_SIZE + k) as u32;
        if ids.windows(2).any(|w| (w[0], w[1]) == pair) {
            ids = replace_pair(&ids, pair, new_id);
        }
    }
    for id in ids.iter_mut() {
        *id += vocab.id_offset();
    }
    Ok(TokenSequence {
        ids,
        leads: sequence.leads().to_vec(),
        samples_per_lead: sequence.samples_per_lead(),
        fs: sequence.fs(),
    })
}

/// Expand token ids back into the exact symbol sequence they encode.
pub fn decode(tokens: &TokenSequence, vocab: &BpeVocab) -> Result<SymbolSequence> {
    let mut symbols = Vec::new();
    for &id in &tokens.ids {
        symbols.extend_from_slice(vocab.token_string(id)?.as_bytes());
    }
    SymbolSequence::new(
        symbols,
        tokens.leads.clone(),
        tokens.samples_per_lead,
        tokens.fs,
    )
}

fn header_line(leads: &[Lead], samples: usize, fs: f64) -> String {
    let names: Vec<&str> = leads.iter().map(|l| l.name()).collect();
    format!("leads={} samples={samples} fs={fs}", names.join(","))
}

fn parse_header(kind: &str, line: &str) -> Result<(Vec<Lead>, usize, f64)> {
    let mut leads = None;
    let mut samples = None;
    let mut fs = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::MalformedHeader(format!("{kind}: bad field {field:?}")))?;
        match key {
            "leads" => {
                let parsed: Option<Vec<Lead>> = value.split(',').map(Lead::from_name).collect();
                leads = Some(parsed.ok_or_else(|| {
                    Error::MalformedHeader(format!("{kind}: unknown lead in {value:?}"))
                })?);
            }
            "samples" => {
                samples = Some(value.parse::<usize>().map_err(|_| {
                    Error::MalformedHeader(format!("{kind}: bad samples {value:?}"))
                })?);
            }
            "fs" => {
                fs = Some(value.parse::<f64>().map_err(|_| {
                    Error::MalformedHeader(format!("{kind}: bad fs {value:?}"))
                })?);
            }
            _ => return Err(Error::MalformedHeader(format!("{kind}: unknown key {key:?}"))),
        }
    }
    match (leads, samples, fs) {
        (Some(l), Some(s), Some(f)) => Ok((l, s, f)),
        _ => Err(Error::MalformedHeader(format!("{kind}: missing fields"))),
    }
}

/// Write a symbol sequence as two text lines: shape header, then symbols.
pub fn write_symbols<W: Write>(sequence: &SymbolSequence, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "ecgsym v1 {}",
        header_line(sequence.leads(), sequence.samples_per_lead(), sequence.fs())
    )?;
    writer.write_all(sequence.symbols())?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Read a symbol sequence written by [`write_symbols`].
pub fn read_symbols<R: Read>(reader: R) -> Result<SymbolSequence> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("symbol file is empty".into()))??;
    let rest = header
        .strip_prefix("ecgsym v1 ")
        .ok_or_else(|| Error::MalformedHeader("expected `ecgsym v1` header".into()))?;
    let (leads, samples, fs) = parse_header("symbol file", rest)?;
    let body = lines
        .next()
        .ok_or_else(|| Error::TruncatedPayload("symbol file has no body".into()))??;
    SymbolSequence::new(body.into_bytes(), leads, samples, fs)
}

/// Write a token sequence as two text lines: shape header, then ids.
pub fn write_tokens<W: Write>(tokens: &TokenSequence, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "ecgtok v1 {}",
        header_line(&tokens.leads, tokens.samples_per_lead, tokens.fs)
    )?;
    let ids: Vec<String> = tokens.ids.iter().map(|id| id.to_string()).collect();
    writeln!(writer, "{}", ids.join(" "))?;
    Ok(())
}

/// Read a token sequence written by [`write_tokens`].
pub fn read_tokens<R: Read>(reader: R) -> Result<TokenSequence> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("token file is empty".into()))??;
    let rest = header
        .strip_prefix("ecgtok v1 ")
        .ok_or_else(|| Error::MalformedHeader("expected `ecgtok v1` header".into()))?;
    let (leads, samples, fs) = parse_header("token file", rest)?;
    let body = lines
        .next()
        .ok_or_else(|| Error::TruncatedPayload("token file has no body".into()))??;
    let ids = body
        .split_whitespace()
        .map(|tok| {
            tok.parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad token id {tok:?}")))
        })
        .collect::<Result<Vec<u32>>>()?;
    if ids.is_empty() {
        return Err(Error::EmptyInput("token file body".into()));
    }
    Ok(TokenSequence {
        ids,
        leads,
        samples_per_lead: samples,
        fs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::CANONICAL_LEADS;
    use proptest::prelude::*;

    /// Brute-force reference trainer: recounts every pair from scratch each
    /// round. Deliberately simple and independent of the incremental
    /// bookkeeping in [`train_bpe`].
    fn oracle_train(corpus: &[&str], num_merges: usize) -> Vec<(String, String)> {
        let mut seqs: Vec<Vec<String>> = corpus
            .iter()
            .map(|s| s.chars().map(|c| c.to_string()).collect())
            .collect();
        let mut merges = Vec::new();
        for _ in 0..num_merges {
            let mut counts: HashMap<(String, String), i64> = HashMap::new();
            for seq in &seqs {
                for w in seq.windows(2) {
                    *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
                }
            }
            let best = counts
                .into_iter()
                .filter(|(_, c)| *c >= 2)
                .min_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then_with(|| pa.cmp(pb)));
            let Some((pair, _)) = best else { break };
            let joined = format!("{}{}", pair.0, pair.1);
            for seq in seqs.iter_mut() {
                let mut out = Vec::with_capacity(seq.len());
                let mut i = 0;
                while i < seq.len() {
                    if i + 1 < seq.len() && seq[i] == pair.0 && seq[i + 1] == pair.1 {
                        out.push(joined.clone());
                        i += 2;
                    } else {
                        out.push(seq[i].clone());
                        i += 1;
                    }
                }
                *seq = out;
            }
            merges.push(pair);
        }
        merges
    }

    fn train_on_texts(texts: &[&str], num_merges: usize) -> BpeVocab {
        let corpus: Vec<SymbolSequence> = texts
            .iter()
            .map(|t| SymbolSequence::from_text(t).unwrap())
            .collect();
        train_bpe(
            &corpus,
            &BpeTrainConfig {
                num_merges,
                id_offset: 0,
            },
        )
        .unwrap()
    }

    fn merge_strings(vocab: &BpeVocab) -> Vec<(String, String)> {
        vocab
            .merges()
            .iter()
            .map(|&(l, r)| {
                (
                    vocab.token_string(l).unwrap().to_string(),
                    vocab.token_string(r).unwrap().to_string(),
                )
            })
            .collect()
    }

    fn unit_record(values: Vec<Vec<f64>>) -> EcgRecord {
        let leads = CANONICAL_LEADS[..values.len()].to_vec();
        EcgRecord::new(leads, 250.0, values).unwrap()
    }

    #[test]
    fn quantization_bins_and_letters() {
        let rec = unit_record(vec![vec![0.0, 0.5, 1.0, 0.999, 1.0 / 26.0]]);
        let seq = quantize(&rec).unwrap();
        // 0.5 * 26 = 13 -> 'n'; 1.0 clamps into the last bin 'z'.
        assert_eq!(seq.as_str(), "anzzb");
    }

    #[test]
    fn quantization_covers_all_bins() {
        // Bin boundaries k/26 are not exactly representable, so probe just
        // inside each bin rather than on the edge.
        for bin in 0..26usize {
            let low = bin as f64 / 26.0 + 1e-9;
            let high = ((bin + 1) as f64 / 26.0) - 1e-9;
            let rec = unit_record(vec![vec![low, high]]);
            let seq = quantize(&rec).unwrap();
            let want = (b'a' + bin as u8) as char;
            assert_eq!(seq.as_str(), format!("{want}{want}"), "bin {bin}");
        }
    }

    #[test]
    fn quantization_is_lead_major() {
        let rec = unit_record(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        let seq = quantize(&rec).unwrap();
        assert_eq!(seq.as_str(), "aazz");
        assert_eq!(seq.leads().len(), 2);
        assert_eq!(seq.samples_per_lead(), 2);
    }

    #[test]
    fn quantization_rejects_out_of_range_samples() {
        let rec = unit_record(vec![vec![0.5, 1.2]]);
        assert!(matches!(
            quantize(&rec),
            Err(Error::SampleOutOfRange { .. })
        ));
        let rec = unit_record(vec![vec![-0.1]]);
        assert!(matches!(
            quantize(&rec),
            Err(Error::SampleOutOfRange { .. })
        ));
    }

    #[test]
    fn dequantization_error_is_at_most_half_a_bin() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let rec = unit_record(vec![values.clone()]);
        let seq = quantize(&rec).unwrap();
        let back = dequantize(&seq).unwrap();
        for (orig, rebuilt) in values.iter().zip(&back.rows()[0]) {
            assert!(
                (orig - rebuilt).abs() <= 1.0 / 52.0 + 1e-12,
                "{orig} vs {rebuilt}"
            );
        }
        // Bin centers re-quantize to the same symbols.
        assert_eq!(quantize(&back).unwrap(), seq);
    }

    #[test]
    fn single_merge_on_alternating_corpus() {
        let vocab = train_on_texts(&["ababab"], 1);
        assert_eq!(merge_strings(&vocab), vec![("a".into(), "b".into())]);
        assert_eq!(vocab.size(), 27);
        let seq = SymbolSequence::from_text("ababab").unwrap();
        let tokens = encode(&seq, &vocab).unwrap();
        assert_eq!(tokens.ids.len(), 3);
        assert_eq!(tokens.ids, vec![26, 26, 26]);
    }

    #[test]
    fn repeated_letter_corpus_stops_when_no_pair_repeats() {
        // "aaaa": (a,a) occurs 3 times (adjacent positions) -> merge to "aa".
        // After rewriting, ("aa","aa") occurs once, below the >= 2 floor, so
        // training stops even though a second merge was requested.
        let vocab = train_on_texts(&["aaaa"], 2);
        assert_eq!(merge_strings(&vocab), vec![("a".into(), "a".into())]);
        assert_eq!(vocab.size(), 27);
        let seq = SymbolSequence::from_text("aaaa").unwrap();
        let tokens = encode(&seq, &vocab).unwrap();
        assert_eq!(tokens.ids, vec![26, 26]);
        // The oracle agrees.
        assert_eq!(
            oracle_train(&["aaaa"], 2),
            vec![("a".to_string(), "a".to_string())]
        );
    }

    #[test]
    fn overlapping_triple_resolves_left_to_right() {
        // "aaabaaa": pair (a,a) count 4 -> merge; each "aaa" -> ["aa", "a"].
        let vocab = train_on_texts(&["aaabaaa"], 1);
        let seq = SymbolSequence::from_text("aaabaaa").unwrap();
        let tokens = encode(&seq, &vocab).unwrap();
        let strings: Vec<&str> = tokens
            .ids
            .iter()
            .map(|&id| vocab.token_string(id).unwrap())
            .collect();
        assert_eq!(strings, vec!["aa", "a", "b", "aa", "a"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // "cdcd" and "abab": pairs (c,d), (d,c), (a,b), (b,a) all occur
        // twice; (a,b) is lexicographically smallest.
        let vocab = train_on_texts(&["cdcdx", "ababy"], 1);
        assert_eq!(merge_strings(&vocab), vec![("a".into(), "b".into())]);
    }

    #[test]
    fn trainer_matches_bruteforce_oracle_on_random_corpora() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(2024);
        for round in 0..20 {
            let texts: Vec<String> = (0..rng.gen_range(1..5))
                .map(|_| {
                    let len = rng.gen_range(1..120);
                    (0..len)
                        .map(|_| (b'a' + rng.gen_range(0..4u8)) as char)
                        .collect()
                })
                .collect();
            let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
            let num_merges = rng.gen_range(0..12);
            let vocab = train_on_texts(&refs, num_merges);
            let expected = oracle_train(&refs, num_merges);
            assert_eq!(
                merge_strings(&vocab),
                expected,
                "round {round}: corpus {refs:?} merges {num_merges}"
            );
        }
    }

    #[test]
    fn training_is_deterministic_across_runs_and_thread_counts() {
        let texts: Vec<String> = (0..8)
            .map(|i| {
                (0..400)
                    .map(|j| (b'a' + (((i * 7 + j * 13) % 26) as u8 % 5)) as char)
                    .collect()
            })
            .collect();
        let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
        let save = |vocab: &BpeVocab| {
            let mut bytes = Vec::new();
            vocab.save(&mut bytes).unwrap();
            bytes
        };
        let baseline = save(&train_on_texts(&refs, 40));
        let again = save(&train_on_texts(&refs, 40));
        assert_eq!(baseline, again, "repeated runs must be byte-identical");
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| save(&train_on_texts(&refs, 40)));
        assert_eq!(baseline, single, "thread count must not change training");
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(
            train_bpe(&[], &BpeTrainConfig::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn decode_inverts_encode() {
        let vocab = train_on_texts(&["abcabcabc", "bcbcbc"], 6);
        for text in ["abcabcabc", "aaa", "cbacba", "b"] {
            let seq = SymbolSequence::from_text(text).unwrap();
            let tokens = encode(&seq, &vocab).unwrap();
            let back = decode(&tokens, &vocab).unwrap();
            assert_eq!(back.as_str(), text);
        }
    }

    #[test]
    fn id_offset_shifts_every_token() {
        let corpus = [SymbolSequence::from_text("ababab").unwrap()];
        let vocab = train_bpe(
            &corpus,
            &BpeTrainConfig {
                num_merges: 1,
                id_offset: 1000,
            },
        )
        .unwrap();
        let tokens = encode(&corpus[0], &vocab).unwrap();
        assert_eq!(tokens.ids, vec![1026, 1026, 1026]);
        assert_eq!(decode(&tokens, &vocab).unwrap().as_str(), "ababab");
        // Ids below the offset are invalid.
        let bad = TokenSequence {
            ids: vec![26],
            ..tokens
        };
        assert!(matches!(decode(&bad, &vocab), Err(Error::UnknownTokenId(26))));
    }

    #[test]
    fn vocab_save_load_round_trip() {
        let vocab = train_on_texts(&["abcabcabcxyzxyz"], 8);
        let mut bytes = Vec::new();
        vocab.save(&mut bytes).unwrap();
        let loaded = BpeVocab::load(bytes.as_slice()).unwrap();
        assert_eq!(loaded, vocab);
    }

    #[test]
    fn vocab_load_rejects_corrupt_files() {
        assert!(matches!(
            BpeVocab::load(&b"not json"[..]),
            Err(Error::InvalidVocab(_))
        ));
        let forward_ref = r#"{"version":1,"alphabet":"abcdefghijklmnopqrstuvwxyz","id_offset":0,"merges":[[0,99]]}"#;
        assert!(matches!(
            BpeVocab::load(forward_ref.as_bytes()),
            Err(Error::InvalidVocab(_))
        ));
        let bad_version = r#"{"version":3,"alphabet":"abcdefghijklmnopqrstuvwxyz","id_offset":0,"merges":[]}"#;
        assert!(matches!(
            BpeVocab::load(bad_version.as_bytes()),
            Err(Error::InvalidVocab(_))
        ));
    }

    #[test]
    fn symbol_and_token_files_round_trip() {
        let rec = unit_record(vec![vec![0.1, 0.4, 0.9], vec![0.2, 0.6, 0.8]]);
        let seq = quantize(&rec).unwrap();
        let mut text = Vec::new();
        write_symbols(&seq, &mut text).unwrap();
        let back = read_symbols(text.as_slice()).unwrap();
        assert_eq!(back, seq);

        let vocab = train_on_texts(&["ababab"], 1);
        let tokens = encode(&seq, &vocab).unwrap();
        let mut tok_text = Vec::new();
        write_tokens(&tokens, &mut tok_text).unwrap();
        let back = read_tokens(tok_text.as_slice()).unwrap();
        assert_eq!(back, tokens);
    }

    proptest! {
        #[test]
        fn encode_then_decode_is_identity(
            text in "[a-e]{1,200}",
            merges in 0usize..20,
        ) {
            let vocab = train_on_texts(&[text.as_str()], merges);
            let seq = SymbolSequence::from_text(&text).unwrap();
            let tokens = encode(&seq, &vocab).unwrap();
            let back = decode(&tokens, &vocab).unwrap();
            prop_assert_eq!(back.as_str(), text.as_str());
        }

        #[test]
        fn more_merges_never_lengthen_encodings(
            text in "[a-d]{1,150}",
            small in 0usize..8,
            extra in 0usize..8,
        ) {
            let vocab_small = train_on_texts(&[text.as_str()], small);
            let vocab_large = train_on_texts(&[text.as_str()], small + extra);
            let seq = SymbolSequence::from_text(&text).unwrap();
            let short = encode(&seq, &vocab_small).unwrap().ids.len();
            let long = encode(&seq, &vocab_large).unwrap().ids.len();
            prop_assert!(long <= short, "{long} > {short}");
        }

        #[test]
        fn quantize_dequantize_error_bound(
            values in proptest::collection::vec(0.0f64..=1.0, 1..100),
        ) {
            let rec = unit_record(vec![values.clone()]);
            let seq = quantize(&rec).unwrap();
            let back = dequantize(&seq).unwrap();
            for (orig, rebuilt) in values.iter().zip(&back.rows()[0]) {
                prop_assert!((orig - rebuilt).abs() <= 1.0 / 52.0 + 1e-12);
            }
        }
    }
}
