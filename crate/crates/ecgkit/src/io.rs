//! Record serialization: the `ecgb-v1` binary format and CSV.
//!
//! `ecgb-v1` layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ECGB"
//! 4       1     version (1)
//! 5       2     lead count C (u16)
//! 7       4     samples per lead L (u32)
//! 11      4     sampling frequency (f32)
//! 15      48    12 x 4-byte lead-name codes (ASCII, zero-padded)
//! 63      4CL   samples, f32, lead-major (row 0 fully, then row 1, ...)
//! ```
//!
//! Samples are stored as `f32`; reading and re-writing a file is therefore
//! byte-identical, and a record whose samples are `f32`-representable
//! round-trips exactly. CSV files carry a header row of lead names and one
//! row per time step; CSV does not encode the sampling frequency, so readers
//! must supply it (see [`read_csv`]).
//!
//! Both formats require exactly the twelve canonical leads (in any order).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::record::{EcgRecord, Lead, CANONICAL_LEADS};

const MAGIC: [u8; 4] = *b"ECGB";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 2 + 4 + 4 + 12 * 4;

/// Sampling frequency assumed for CSV inputs when none is supplied.
pub const DEFAULT_CSV_FS: f64 = 500.0;

/// On-disk record encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    /// The `ecgb-v1` binary layout described in the module docs.
    EcgbV1,
    /// Comma-separated text: lead-name header, one row per time step.
    Csv,
}

impl RecordFormat {
    /// Guess a format from a file extension (`.ecgb` or `.csv`).
    pub fn from_path(path: &Path) -> Option<RecordFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ecgb") => Some(RecordFormat::EcgbV1),
            Some("csv") => Some(RecordFormat::Csv),
            _ => None,
        }
    }
}

pub(crate) fn lead_code(lead: Lead) -> [u8; 4] {
    let mut code = [0u8; 4];
    let name = lead.name().as_bytes();
    code[..name.len()].copy_from_slice(name);
    code
}

pub(crate) fn lead_from_code(code: &[u8; 4]) -> Result<Lead> {
    let end = code.iter().position(|&b| b == 0).unwrap_or(4);
    let name = std::str::from_utf8(&code[..end])
        .map_err(|_| Error::MalformedHeader("lead code is not ASCII".into()))?;
    Lead::from_name(name)
        .ok_or_else(|| Error::MalformedHeader(format!("unknown lead code {name:?}")))
}

fn require_twelve_leads(record: &EcgRecord) -> Result<()> {
    record.require_all_leads()?;
    debug_assert_eq!(record.num_leads(), 12);
    Ok(())
}

/// Serialize a twelve-lead record as `ecgb-v1`.
pub fn write_ecgb<W: Write>(record: &EcgRecord, mut writer: W) -> Result<()> {
    require_twelve_leads(record)?;
    let samples = u32::try_from(record.samples_per_lead())
        .map_err(|_| Error::InvalidParameter("record too long for ecgb-v1".into()))?;
    writer.write_all(&MAGIC)?;
    writer.write_all(&[VERSION])?;
    writer.write_all(&(record.num_leads() as u16).to_le_bytes())?;
    writer.write_all(&samples.to_le_bytes())?;
    writer.write_all(&(record.fs() as f32).to_le_bytes())?;
    for lead in record.leads() {
        writer.write_all(&lead_code(*lead))?;
    }
    let mut buf = Vec::with_capacity(record.samples_per_lead() * 4);
    for row in record.rows() {
        buf.clear();
        for &v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        writer.write_all(&buf)?;
    }
    Ok(())
}

/// Deserialize an `ecgb-v1` record, validating header and payload.
pub fn read_ecgb<R: Read>(mut reader: R) -> Result<EcgRecord> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::MalformedHeader("bad magic, expected \"ECGB\"".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {}",
            bytes[4]
        )));
    }
    let lead_count = u16::from_le_bytes([bytes[5], bytes[6]]) as usize;
    let samples = u32::from_le_bytes([bytes[7], bytes[8], bytes[9], bytes[10]]) as usize;
    let fs = f32::from_le_bytes([bytes[11], bytes[12], bytes[13], bytes[14]]) as f64;
    if lead_count != 12 {
        return Err(Error::MalformedHeader(format!(
            "lead count {lead_count}, expected 12"
        )));
    }
    if samples == 0 {
        return Err(Error::MalformedHeader("zero samples per lead".into()));
    }
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::MalformedHeader(format!(
            "invalid sampling frequency {fs}"
        )));
    }
    let mut leads = Vec::with_capacity(12);
    for i in 0..12 {
        let start = 15 + 4 * i;
        let code: [u8; 4] = bytes[start..start + 4].try_into().unwrap();
        leads.push(lead_from_code(&code)?);
    }
    let expected = lead_count * samples * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload(format!(
            "payload is {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let mut rows = Vec::with_capacity(lead_count);
    for c in 0..lead_count {
        let mut row = Vec::with_capacity(samples);
        for s in 0..samples {
            let at = (c * samples + s) * 4;
            let v =
                f32::from_le_bytes([payload[at], payload[at + 1], payload[at + 2], payload[at + 3]]);
            row.push(v as f64);
        }
        rows.push(row);
    }
    let record = EcgRecord::new(leads, fs, rows)?;
    require_twelve_leads(&record)?;
    Ok(record)
}

/// Serialize a twelve-lead record as CSV (header of lead names, row per step).
pub fn write_csv<W: Write>(record: &EcgRecord, writer: W) -> Result<()> {
    require_twelve_leads(record)?;
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(record.leads().iter().map(|l| l.name()))
        .map_err(csv_error)?;
    let rows = record.rows();
    let mut line = Vec::with_capacity(rows.len());
    for t in 0..record.samples_per_lead() {
        line.clear();
        for row in rows {
            // `{}` on f64 prints the shortest digits that parse back exactly,
            // so CSV round trips are lossless.
            line.push(format!("{}", row[t]));
        }
        out.write_record(&line).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Deserialize a CSV record; `fs` supplies the sampling frequency the text
/// format cannot carry.
pub fn read_csv<R: Read>(reader: R, fs: f64) -> Result<EcgRecord> {
    let mut input = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = input.headers().map_err(csv_error)?.clone();
    let mut leads = Vec::with_capacity(header.len());
    for name in header.iter() {
        let lead = Lead::from_name(name)
            .ok_or_else(|| Error::MalformedHeader(format!("unknown lead column {name:?}")))?;
        if leads.contains(&lead) {
            return Err(Error::DuplicateLead(lead.name().to_string()));
        }
        leads.push(lead);
    }
    for lead in CANONICAL_LEADS {
        if !leads.contains(&lead) {
            return Err(Error::MissingLead(lead.name().to_string()));
        }
    }
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); leads.len()];
    for (t, line) in input.records().enumerate() {
        let line = line.map_err(csv_error)?;
        if line.len() != leads.len() {
            return Err(Error::Parse(format!(
                "row {t} has {} fields, expected {}",
                line.len(),
                leads.len()
            )));
        }
        for (c, field) in line.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {t}, column {c}: bad number {field:?}")))?;
            rows[c].push(v);
        }
    }
    if rows[0].is_empty() {
        return Err(Error::TruncatedPayload("csv has no data rows".into()));
    }
    EcgRecord::new(leads, fs, rows)
}

/// Read a record from a file in the given format.
///
/// `csv_fs` supplies the sampling frequency for CSV inputs (which cannot
/// carry one); [`DEFAULT_CSV_FS`] is used when `None`. It is ignored for
/// `ecgb-v1` files.
pub fn read_record(path: &Path, format: RecordFormat, csv_fs: Option<f64>) -> Result<EcgRecord> {
    let file = File::open(path)?;
    match format {
        RecordFormat::EcgbV1 => read_ecgb(BufReader::new(file)),
        RecordFormat::Csv => read_csv(BufReader::new(file), csv_fs.unwrap_or(DEFAULT_CSV_FS)),
    }
}

/// Write a record to a file in the given format.
pub fn write_record(record: &EcgRecord, path: &Path, format: RecordFormat) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    match format {
        RecordFormat::EcgbV1 => write_ecgb(record, &mut writer)?,
        RecordFormat::Csv => write_csv(record, &mut writer)?,
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(err: csv::Error) -> Error {
    match err.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = err.into_kind() {
                Error::Io(io)
            } else {
                unreachable!()
            }
        }
        _ => Error::Parse(err.to_string()),
    }
}
