//! Multichannel ECG records and canonical lead ordering.
//!
//! A record is a `C x L` matrix of samples (millivolts): one row per lead,
//! `L` samples per row, at a fixed sampling frequency. Downstream stages
//! assume the twelve standard leads in the canonical order given by
//! [`CANONICAL_LEADS`]; [`reorder_leads`] rearranges an arbitrarily ordered
//! twelve-lead record into that order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the twelve standard ECG leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lead {
    I,
    II,
    III,
    AVL,
    AVR,
    AVF,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

/// The canonical lead order used by every downstream representation.
pub const CANONICAL_LEADS: [Lead; 12] = [
    Lead::I,
    Lead::II,
    Lead::III,
    Lead::AVL,
    Lead::AVR,
    Lead::AVF,
    Lead::V1,
    Lead::V2,
    Lead::V3,
    Lead::V4,
    Lead::V5,
    Lead::V6,
];

impl Lead {
    /// Conventional display name (`aVL` style for augmented leads).
    pub fn name(self) -> &'static str {
        match self {
            Lead::I => "I",
            Lead::II => "II",
            Lead::III => "III",
            Lead::AVL => "aVL",
            Lead::AVR => "aVR",
            Lead::AVF => "aVF",
            Lead::V1 => "V1",
            Lead::V2 => "V2",
            Lead::V3 => "V3",
            Lead::V4 => "V4",
            Lead::V5 => "V5",
            Lead::V6 => "V6",
        }
    }

    /// Parse a lead name; case-sensitive, matching [`Lead::name`].
    pub fn from_name(name: &str) -> Option<Lead> {
        CANONICAL_LEADS.iter().copied().find(|l| l.name() == name)
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A multichannel ECG record: one sample row per lead.
///
/// Invariants enforced at construction:
/// - at least one lead and one sample per lead,
/// - every row has the same length,
/// - all samples are finite,
/// - the sampling frequency is finite and positive,
/// - no lead appears twice.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    leads: Vec<Lead>,
    fs: f64,
    rows: Vec<Vec<f64>>,
}

impl EcgRecord {
    /// Build a record from per-lead sample rows, validating all invariants.
    pub fn new(leads: Vec<Lead>, fs: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        if leads.is_empty() || rows.is_empty() {
            return Err(Error::EmptyRecord("record has no leads".into()));
        }
        if leads.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: leads.len(),
                right: rows.len(),
            });
        }
        if !fs.is_finite() || fs <= 0.0 {
            return Err(Error::InvalidSampleRate(fs));
        }
        let len = rows[0].len();
        if len == 0 {
            return Err(Error::EmptyRecord("record has no samples".into()));
        }
        for (lead, row) in leads.iter().zip(&rows) {
            if row.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: row.len(),
                });
            }
            if let Some(index) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample {
                    lead: lead.name().to_string(),
                    index,
                });
            }
        }
        let mut seen = [false; 12];
        for lead in &leads {
            let slot = CANONICAL_LEADS.iter().position(|l| l == lead).unwrap();
            if seen[slot] {
                return Err(Error::DuplicateLead(lead.name().to_string()));
            }
            seen[slot] = true;
        }
        Ok(EcgRecord { leads, fs, rows })
    }

    /// Lead identifiers in row order.
    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    /// Sampling frequency in Hz.
    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Number of leads (rows).
    pub fn num_leads(&self) -> usize {
        self.leads.len()
    }

    /// Samples per lead (columns).
    pub fn samples_per_lead(&self) -> usize {
        self.rows[0].len()
    }

    /// All sample rows, one per lead, in row order.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Samples for one lead, if present.
    pub fn lead(&self, lead: Lead) -> Option<&[f64]> {
        self.leads
            .iter()
            .position(|l| *l == lead)
            .map(|i| self.rows[i].as_slice())
    }

    /// True when the record holds exactly the twelve leads in canonical order.
    pub fn is_canonical(&self) -> bool {
        self.leads.as_slice() == CANONICAL_LEADS
    }

    /// Error with the first missing canonical lead unless all twelve are present.
    pub fn require_all_leads(&self) -> Result<()> {
        for lead in CANONICAL_LEADS {
            if !self.leads.contains(&lead) {
                return Err(Error::MissingLead(lead.name().to_string()));
            }
        }
        Ok(())
    }

    /// Apply a per-lead transform, keeping leads and reporting the new rate.
    ///
    /// The transform runs on each row independently; the result is validated
    /// like any constructed record (useful after filtering, which must not
    /// produce non-finite output).
    pub fn map_rows<F>(&self, fs: f64, mut f: F) -> Result<EcgRecord>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            rows.push(f(row)?);
        }
        EcgRecord::new(self.leads.clone(), fs, rows)
    }

    /// Minimum and maximum over every sample of every lead.
    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for row in &self.rows {
            for &v in row {
                min = min.min(v);
                max = max.max(v);
            }
        }
        (min, max)
    }
}

/// Rearrange a twelve-lead record into canonical order.
///
/// The input may list its leads in any order but must contain all twelve
/// exactly once; otherwise [`Error::MissingLead`] is raised (duplicates are
/// impossible for a validated record). Applying this to an already canonical
/// record returns an identical copy.
pub fn reorder_leads(record: &EcgRecord) -> Result<EcgRecord> {
    record.require_all_leads()?;
    let mut rows = Vec::with_capacity(12);
    for lead in CANONICAL_LEADS {
        rows.push(record.lead(lead).unwrap().to_vec());
    }
    EcgRecord::new(CANONICAL_LEADS.to_vec(), record.fs(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_with_marker(count: usize) -> Vec<Vec<f64>> {
        // Row i is [i, i, ...] so provenance survives shuffling.
        (0..count).map(|i| vec![i as f64; 4]).collect()
    }

    #[test]
    fn canonical_order_matches_convention() {
        let names: Vec<&str> = CANONICAL_LEADS.iter().map(|l| l.name()).collect();
        assert_eq!(
            names,
            ["I", "II", "III", "aVL", "aVR", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"]
        );
    }

    #[test]
    fn lead_names_round_trip() {
        for lead in CANONICAL_LEADS {
            assert_eq!(Lead::from_name(lead.name()), Some(lead));
        }
        assert_eq!(Lead::from_name("V7"), None);
        assert_eq!(Lead::from_name("avl"), None);
    }

    #[test]
    fn constructor_rejects_non_finite_samples() {
        let err = EcgRecord::new(
            vec![Lead::I, Lead::II],
            500.0,
            vec![vec![0.0, 1.0], vec![f64::NAN, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteSample { .. }), "{err}");
    }

    #[test]
    fn constructor_rejects_duplicate_leads() {
        let err = EcgRecord::new(
            vec![Lead::V1, Lead::V1],
            500.0,
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLead(ref name) if name == "V1"), "{err}");
    }

    #[test]
    fn constructor_rejects_bad_rate_and_ragged_rows() {
        assert!(matches!(
            EcgRecord::new(vec![Lead::I], 0.0, vec![vec![1.0]]),
            Err(Error::InvalidSampleRate(_))
        ));
        assert!(matches!(
            EcgRecord::new(vec![Lead::I], -5.0, vec![vec![1.0]]),
            Err(Error::InvalidSampleRate(_))
        ));
        assert!(matches!(
            EcgRecord::new(
                vec![Lead::I, Lead::II],
                500.0,
                vec![vec![1.0, 2.0], vec![1.0]]
            ),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            EcgRecord::new(vec![], 500.0, vec![]),
            Err(Error::EmptyRecord(_))
        ));
    }

    #[test]
    fn reorder_is_identity_on_canonical_input() {
        let rec =
            EcgRecord::new(CANONICAL_LEADS.to_vec(), 500.0, rows_with_marker(12)).unwrap();
        let out = reorder_leads(&rec).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn reorder_restores_canonical_order_from_reversed_input() {
        let mut leads = CANONICAL_LEADS.to_vec();
        leads.reverse();
        let rec = EcgRecord::new(leads, 250.0, rows_with_marker(12)).unwrap();
        let out = reorder_leads(&rec).unwrap();
        assert!(out.is_canonical());
        // Row that carried marker 11 was lead I (reversed input), so after
        // reordering, lead I must carry marker 11 again.
        assert_eq!(out.lead(Lead::I).unwrap()[0], 11.0);
        assert_eq!(out.lead(Lead::V6).unwrap()[0], 0.0);
    }

    #[test]
    fn reorder_rejects_missing_lead() {
        let leads: Vec<Lead> = CANONICAL_LEADS[..11].to_vec();
        let rec = EcgRecord::new(leads, 500.0, rows_with_marker(11)).unwrap();
        let err = reorder_leads(&rec).unwrap_err();
        assert!(matches!(err, Error::MissingLead(ref name) if name == "V6"), "{err}");
    }
}
