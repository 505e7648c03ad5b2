//! Rational polyphase resampling with anti-aliasing.
//!
//! The rate change `target_fs / fs` is approximated by a reduced rational
//! `p / q` (continued fractions, denominator bounded by
//! [`MAX_RATIO_DENOMINATOR`]). Conceptually the signal is upsampled by `p`,
//! low-pass filtered at the narrower of the two Nyquist limits with a
//! Kaiser-windowed sinc FIR, and decimated by `q`; the implementation
//! evaluates only the output samples (polyphase), so cost scales with the
//! output length. Edges are extended by symmetric reflection so the filter
//! never sees an artificial step.
//!
//! The output length is `round(L * target_fs / fs)` regardless of the
//! rational approximation, and resampling to the input rate returns the
//! signal unchanged.

use crate::error::{Error, Result};
use crate::record::EcgRecord;

/// Bound on the reduced denominator of the rate-ratio approximation.
pub const MAX_RATIO_DENOMINATOR: u64 = 1000;

/// Kaiser window shape parameter for the anti-aliasing FIR.
const KAISER_BETA: f64 = 5.0;

/// Half-length of the FIR per unit of `max(p, q)`.
const HALF_LEN_FACTOR: u64 = 10;

/// Best rational approximation `p / q` of `ratio` with `q <= max_denom`,
/// via continued-fraction convergents.
pub fn rational_approx(ratio: f64, max_denom: u64) -> Result<(u64, u64)> {
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rate ratio must be positive, got {ratio}"
        )));
    }
    let (mut h2, mut h1) = (0u64, 1u64); // h_{-2}, h_{-1}
    let (mut k2, mut k1) = (1u64, 0u64);
    let mut x = ratio;
    let mut best = (ratio.round().max(1.0) as u64, 1u64);
    for _ in 0..64 {
        let a = x.floor();
        let (Some(h), Some(k)) = (
            (a as u64).checked_mul(h1).and_then(|v| v.checked_add(h2)),
            (a as u64).checked_mul(k1).and_then(|v| v.checked_add(k2)),
        ) else {
            break;
        };
        if k > max_denom {
            break;
        }
        if h > 0 {
            best = (h, k);
        }
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        let frac = x - a;
        if frac.abs() < 1e-12 * x.abs().max(1.0) {
            break;
        }
        x = 1.0 / frac;
    }
    Ok(best)
}

fn bessel_i0(x: f64) -> f64 {
    // Power series; converges quickly for the beta values used here.
    let mut term = 1.0;
    let mut sum = 1.0;
    let half_x = x / 2.0;
    for k in 1..64 {
        term *= (half_x / k as f64) * (half_x / k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass with cutoff `1 / k_max` (normalized to the
/// upsampled Nyquist), scaled by `p` to preserve amplitude.
fn design_fir(p: u64, q: u64) -> Vec<f64> {
    let k_max = p.max(q);
    let half = (HALF_LEN_FACTOR * k_max) as i64;
    let cutoff = 1.0 / k_max as f64;
    let i0_beta = bessel_i0(KAISER_BETA);
    let mut taps = Vec::with_capacity((2 * half + 1) as usize);
    for i in -half..=half {
        let sinc = if i == 0 {
            cutoff
        } else {
            let t = std::f64::consts::PI * i as f64;
            (cutoff * t).sin() / t
        };
        let r = i as f64 / half as f64;
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
        taps.push(p as f64 * sinc * window);
    }
    taps
}

/// Index into `x` with half-sample symmetric reflection outside `[0, n)`.
fn reflect(x: &[f64], i: i64) -> f64 {
    let n = x.len() as i64;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    x[m as usize]
}

/// Resample one channel from `fs` to `target_fs`.
///
/// Returns the input unchanged when the rates are equal. The output has
/// exactly `round(len * target_fs / fs)` samples.
pub fn resample(x: &[f64], fs: f64, target_fs: f64) -> Result<Vec<f64>> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::InvalidSampleRate(fs));
    }
    if !target_fs.is_finite() || target_fs <= 0.0 {
        return Err(Error::InvalidSampleRate(target_fs));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("resample input".into()));
    }
    if fs == target_fs {
        return Ok(x.to_vec());
    }
    let ratio = target_fs / fs;
    let (p, q) = rational_approx(ratio, MAX_RATIO_DENOMINATOR)?;
    let out_len = (x.len() as f64 * ratio).round() as usize;
    if out_len == 0 {
        return Err(Error::InvalidParameter(format!(
            "resampling {} samples by {ratio} yields an empty signal",
            x.len()
        )));
    }
    let taps = design_fir(p, q);
    let half = (taps.len() / 2) as i64;
    let (pi, qi) = (p as i64, q as i64);
    let mut y = Vec::with_capacity(out_len);
    for m in 0..out_len as i64 {
        // Center of the filter in the upsampled grid for output sample m.
        let center = m * qi;
        // Only upsampled positions divisible by p carry input samples:
        // walk tap indices j with (center + half - j) % p == 0.
        let first = (center + half).rem_euclid(pi);
        let mut acc = 0.0;
        let mut j = first;
        while j < taps.len() as i64 {
            // Exact division: j was chosen so (center + half - j) % p == 0.
            let u = (center + half - j) / pi;
            acc += taps[j as usize] * reflect(x, u);
            j += pi;
        }
        y.push(acc);
    }
    Ok(y)
}

/// Resample every lead of a record to `target_fs`.
pub fn resample_record(record: &EcgRecord, target_fs: f64) -> Result<EcgRecord> {
    record.map_rows(target_fs, |row| resample(row, record.fs(), target_fs))
}
