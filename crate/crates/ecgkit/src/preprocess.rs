//! The record preprocessing chain and its stages.
//!
//! [`run_pipeline`] applies, in order: lead reordering, powerline notch
//! filters, a Butterworth band-pass, a baseline high-pass, wavelet
//! denoising, resampling to the target rate, and non-overlapping
//! segmentation. All filtering is zero-phase ([`crate::filter::filtfilt`]).
//!
//! Min-max normalization is deliberately *not* part of the pipeline: signal
//! and symbolic representations normalize segments to `[0, 1]`, while image
//! rendering works from unnormalized segments (each panel auto-scales).
//! Call [`normalize_record`] where a representation needs it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{design_butter_bandpass, design_butter_highpass, design_notch, filtfilt};
use crate::record::{reorder_leads, EcgRecord};
use crate::resample::resample_record;
use crate::wavelet::denoise_record;

/// Parameters of the preprocessing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Powerline frequencies to notch out, applied in order.
    pub notch_freqs: Vec<f64>,
    /// Notch quality factor (bandwidth = freq / q).
    pub notch_q: f64,
    /// Band-pass corner frequencies in Hz.
    pub bandpass_low: f64,
    pub bandpass_high: f64,
    /// Band-pass prototype order (pole pairs per corner).
    pub bandpass_order: usize,
    /// Baseline-drift high-pass cutoff in Hz and order.
    pub highpass_cutoff: f64,
    pub highpass_order: usize,
    /// Wavelet denoising decomposition depth.
    pub wavelet_levels: usize,
    /// Output sampling frequency in Hz.
    pub target_fs: f64,
    /// Segment duration in seconds (floor of `seconds * fs` samples).
    pub segment_seconds: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            notch_freqs: vec![50.0, 60.0],
            notch_q: 30.0,
            bandpass_low: 0.5,
            bandpass_high: 100.0,
            bandpass_order: 4,
            highpass_cutoff: 0.05,
            highpass_order: 2,
            wavelet_levels: 4,
            target_fs: 250.0,
            segment_seconds: 5.0,
        }
    }
}

/// Zero-phase notch at `f0` Hz on every lead.
pub fn apply_notch(record: &EcgRecord, f0: f64, q: f64) -> Result<EcgRecord> {
    let filter = design_notch(f0, q, record.fs())?;
    record.map_rows(record.fs(), |row| filtfilt(&filter, row))
}

/// Zero-phase Butterworth band-pass on every lead.
pub fn apply_bandpass(record: &EcgRecord, low: f64, high: f64, order: usize) -> Result<EcgRecord> {
    let filter = design_butter_bandpass(order, low, high, record.fs())?;
    record.map_rows(record.fs(), |row| filtfilt(&filter, row))
}

/// Zero-phase Butterworth high-pass on every lead.
pub fn apply_highpass(record: &EcgRecord, cutoff: f64, order: usize) -> Result<EcgRecord> {
    let filter = design_butter_highpass(order, cutoff, record.fs())?;
    record.map_rows(record.fs(), |row| filtfilt(&filter, row))
}

/// Split a record into non-overlapping segments of `seconds` duration.
///
/// The segment length is `floor(seconds * fs)` samples; the remainder that
/// does not fill a whole segment is discarded. A record shorter than one
/// segment yields an empty list (not an error).
pub fn segment_record(record: &EcgRecord, seconds: f64) -> Result<Vec<EcgRecord>> {
    if !seconds.is_finite() || seconds <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "segment duration must be positive, got {seconds}"
        )));
    }
    let seg_len = (seconds * record.fs()).floor() as usize;
    if seg_len == 0 {
        return Err(Error::InvalidParameter(format!(
            "segment of {seconds} s holds no samples at {} Hz",
            record.fs()
        )));
    }
    let count = record.samples_per_lead() / seg_len;
    let mut segments = Vec::with_capacity(count);
    for s in 0..count {
        let start = s * seg_len;
        let rows: Vec<Vec<f64>> = record
            .rows()
            .iter()
            .map(|row| row[start..start + seg_len].to_vec())
            .collect();
        segments.push(EcgRecord::new(record.leads().to_vec(), record.fs(), rows)?);
    }
    Ok(segments)
}

/// Min-max normalize the whole record into `[0, 1]`.
///
/// One min and one max are taken over *all* leads so inter-lead amplitude
/// relations survive. A constant record has no defined scaling and errors
/// with [`Error::ConstantSignal`].
pub fn normalize_record(record: &EcgRecord) -> Result<EcgRecord> {
    let (min, max) = record.min_max();
    if min == max {
        return Err(Error::ConstantSignal(min));
    }
    let scale = 1.0 / (max - min);
    record.map_rows(record.fs(), |row| {
        Ok(row.iter().map(|v| (v - min) * scale).collect())
    })
}

/// Run the full chain on a twelve-lead record and return its segments.
pub fn run_pipeline(record: &EcgRecord, config: &PreprocessConfig) -> Result<Vec<EcgRecord>> {
    let mut current = reorder_leads(record)?;
    for &f0 in &config.notch_freqs {
        current = apply_notch(&current, f0, config.notch_q)?;
    }
    current = apply_bandpass(
        &current,
        config.bandpass_low,
        config.bandpass_high,
        config.bandpass_order,
    )?;
    current = apply_highpass(&current, config.highpass_cutoff, config.highpass_order)?;
    current = denoise_record(&current, config.wavelet_levels)?;
    current = resample_record(&current, config.target_fs)?;
    segment_record(&current, config.segment_seconds)
}
