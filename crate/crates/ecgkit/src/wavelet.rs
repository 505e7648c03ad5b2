//! Daubechies-6 wavelet decomposition and denoising.
//!
//! Implements the multi-level discrete wavelet transform with half-sample
//! symmetric boundary extension, its inverse (exact reconstruction), and
//! soft-threshold denoising:
//!
//! 1. decompose each lead to `levels` (default 4) detail bands,
//! 2. estimate the noise scale from the finest band via the median absolute
//!    deviation, `sigma = median(|d1|) / 0.6745`,
//! 3. soft-threshold every detail band at the universal threshold
//!    `tau = sigma * sqrt(2 ln N)` (`N` = samples in the lead),
//! 4. reconstruct to the original length.
//!
//! The noise estimate is per lead: electrode noise differs across channels,
//! and pooling would let one noisy lead over-smooth the others.

use crate::error::{Error, Result};
use crate::record::EcgRecord;

/// db6 synthesis scaling filter (12 taps, 6 vanishing moments).
///
/// Derived by spectral factorization of the Daubechies half-band polynomial
/// and normalized so the taps sum to sqrt(2); matches published tables.
pub const DB6: [f64; 12] = [
    0.11154074335010937,
    0.49462389039845289,
    0.7511339080210947,
    0.31525035170919852,
    -0.22626469396543963,
    -0.12976686756726183,
    0.097501605587322987,
    0.027522865530305664,
    -0.031582039317486002,
    0.00055384220116150718,
    0.0047772575109455038,
    -0.0010773010853084789,
];

const FLEN: usize = 12;

fn filters() -> ([f64; FLEN], [f64; FLEN], [f64; FLEN], [f64; FLEN]) {
    let rec_lo = DB6;
    let mut rec_hi = [0.0; FLEN];
    let mut dec_lo = [0.0; FLEN];
    let mut dec_hi = [0.0; FLEN];
    for n in 0..FLEN {
        rec_hi[n] = if n % 2 == 0 { DB6[FLEN - 1 - n] } else { -DB6[FLEN - 1 - n] };
        dec_lo[n] = DB6[FLEN - 1 - n];
    }
    for n in 0..FLEN {
        dec_hi[n] = rec_hi[FLEN - 1 - n];
    }
    (dec_lo, dec_hi, rec_lo, rec_hi)
}

/// Result of a multi-level decomposition.
///
/// `details[0]` is the finest band (level 1); `approx` is the coarsest
/// approximation. `input_lens[k]` records the length fed into level `k + 1`,
/// which the inverse transform needs to crop each reconstruction stage.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    input_lens: Vec<usize>,
}

impl WaveletDecomposition {
    /// Number of decomposition levels.
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Length of the originally decomposed signal.
    pub fn original_len(&self) -> usize {
        self.input_lens[0]
    }
}

/// Deepest level a signal of `len` samples supports (finer levels would be
/// dominated by boundary extension).
pub fn max_level(len: usize) -> usize {
    if len < FLEN - 1 {
        return 0;
    }
    (len as f64 / (FLEN - 1) as f64).log2().floor() as usize
}

/// Half-sample symmetric extension: `... x1 x0 | x0 x1 ... | xN-1 xN-2 ...`,
/// mirroring repeatedly if the pad is longer than the signal.
fn symmetric_ext(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend(std::iter::repeat(0.0).take(pad));
    ext.extend_from_slice(x);
    ext.extend(std::iter::repeat(0.0).take(pad));
    // Fill left then right by walking the mirrored index sequence.
    let mirror = |i: isize| -> f64 {
        let period = (2 * n) as isize;
        let mut m = i.rem_euclid(period);
        if m >= n as isize {
            m = period - 1 - m;
        }
        x[m as usize]
    };
    for k in 0..pad {
        ext[k] = mirror(k as isize - pad as isize);
        ext[pad + n + k] = mirror((n + k) as isize);
    }
    ext
}

fn analyze(x: &[f64], dec_lo: &[f64; FLEN], dec_hi: &[f64; FLEN]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let pad = FLEN - 1;
    let ext = symmetric_ext(x, pad);
    let out_len = (n + FLEN - 1) / 2;
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for i in 0..out_len {
        // Convolution evaluated at the odd phase: ext index (2i + 1 - j),
        // shifted by pad into the extended buffer.
        let base = 2 * i + 1 + pad;
        let mut a = 0.0;
        let mut d = 0.0;
        for j in 0..FLEN {
            let v = ext[base - j];
            a += dec_lo[j] * v;
            d += dec_hi[j] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

fn synthesize(
    approx: &[f64],
    detail: &[f64],
    out_len: usize,
    rec_lo: &[f64; FLEN],
    rec_hi: &[f64; FLEN],
) -> Vec<f64> {
    let la = approx.len();
    let full = 2 * la + FLEN - 2;
    let mut y = vec![0.0; full];
    for k in 0..la {
        let (a, d) = (approx[k], detail[k]);
        for j in 0..FLEN {
            y[2 * k + j] += a * rec_lo[j] + d * rec_hi[j];
        }
    }
    let start = FLEN - 2;
    y[start..start + out_len].to_vec()
}

/// Multi-level DWT with symmetric boundary extension.
///
/// Errors with [`Error::SignalTooShort`] when `levels` exceeds
/// [`max_level`] for the signal, and rejects `levels == 0`.
pub fn dwt(x: &[f64], levels: usize) -> Result<WaveletDecomposition> {
    if levels == 0 {
        return Err(Error::InvalidParameter(
            "decomposition needs at least one level".into(),
        ));
    }
    let supported = max_level(x.len());
    if levels > supported {
        return Err(Error::SignalTooShort {
            len: x.len(),
            min: (FLEN - 1) << levels,
        });
    }
    let (dec_lo, dec_hi, _, _) = filters();
    let mut input_lens = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    let mut current = x.to_vec();
    for _ in 0..levels {
        input_lens.push(current.len());
        let (approx, detail) = analyze(&current, &dec_lo, &dec_hi);
        details.push(detail);
        current = approx;
    }
    Ok(WaveletDecomposition {
        approx: current,
        details,
        input_lens,
    })
}

/// Inverse multi-level DWT; reconstructs exactly to the original length.
pub fn idwt(decomposition: &WaveletDecomposition) -> Vec<f64> {
    let (_, _, rec_lo, rec_hi) = filters();
    let mut current = decomposition.approx.clone();
    for level in (0..decomposition.levels()).rev() {
        current = synthesize(
            &current,
            &decomposition.details[level],
            decomposition.input_lens[level],
            &rec_lo,
            &rec_hi,
        );
    }
    current
}

/// Noise scale from the finest detail band: `median(|d|) / 0.6745`.
pub fn mad_sigma(detail: &[f64]) -> f64 {
    if detail.is_empty() {
        return 0.0;
    }
    let mut mags: Vec<f64> = detail.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 1 {
        mags[mid]
    } else {
        0.5 * (mags[mid - 1] + mags[mid])
    };
    median / 0.6745
}

/// Universal threshold `sigma * sqrt(2 ln n)`.
pub fn universal_threshold(sigma: f64, n: usize) -> f64 {
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

/// Soft thresholding: shrink toward zero by `tau`, clamping at zero.
pub fn soft_threshold(value: f64, tau: f64) -> f64 {
    value.signum() * (value.abs() - tau).max(0.0)
}

/// Denoise one lead: decompose, soft-threshold every detail band at the
/// universal threshold estimated from the finest band, reconstruct.
pub fn denoise(x: &[f64], levels: usize) -> Result<Vec<f64>> {
    let mut decomposition = dwt(x, levels)?;
    let sigma = mad_sigma(&decomposition.details[0]);
    let tau = universal_threshold(sigma, x.len());
    for detail in &mut decomposition.details {
        for v in detail.iter_mut() {
            *v = soft_threshold(*v, tau);
        }
    }
    Ok(idwt(&decomposition))
}

/// Denoise every lead of a record independently (noise is estimated per
/// lead). Length and sampling frequency are preserved.
pub fn denoise_record(record: &EcgRecord, levels: usize) -> Result<EcgRecord> {
    record.map_rows(record.fs(), |row| denoise(row, levels))
}
