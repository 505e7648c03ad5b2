//! IIR filter design and zero-phase (forward-backward) filtering.
//!
//! Filters are represented as cascades of second-order sections (biquads),
//! which stay numerically well-behaved even for poles very close to the unit
//! circle (the 0.05 Hz baseline high-pass has pole radius > 0.998).
//!
//! [`filtfilt`] applies a cascade forward and then backward, squaring the
//! magnitude response and cancelling phase. Edges are handled the standard
//! way: the signal is extended by odd reflection (3 x filter order samples on
//! each side) and each pass starts from the filter's steady state for the
//! first extended sample, so constant inputs produce exactly constant
//! outputs (zero, for anything with a DC null).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One second-order section with `a0` normalized to 1.
///
/// First-order sections are represented with `b2 == a2 == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Gain at DC (`z = 1`).
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Complex response at normalized angular frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }
}

/// A cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Filter order (two per section; the final section of an odd-order
    /// design is first-order but still counts as a section).
    pub fn order(&self) -> usize {
        self.sections
            .iter()
            .map(|s| if s.a2 == 0.0 && s.b2 == 0.0 { 1 } else { 2 })
            .sum()
    }

    /// Complex response of the whole cascade at frequency `freq` (Hz).
    pub fn response_at(&self, freq: f64, fs: f64) -> Complex64 {
        let omega = 2.0 * std::f64::consts::PI * freq / fs;
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(omega))
    }

    /// Magnitude response at `freq` Hz for a single (one-way) pass.
    pub fn magnitude_at(&self, freq: f64, fs: f64) -> f64 {
        self.response_at(freq, fs).norm()
    }
}

fn check_corner(freq: f64, fs: f64) -> Result<()> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::InvalidSampleRate(fs));
    }
    if !freq.is_finite() || freq <= 0.0 || freq >= fs / 2.0 {
        return Err(Error::FrequencyAboveNyquist {
            freq,
            nyquist: fs / 2.0,
        });
    }
    Ok(())
}

/// Second-order notch at `f0` Hz with quality factor `q`.
///
/// Unit gain at DC and Nyquist, zero at `f0`. The -3 dB bandwidth is
/// `f0 / q`, realized with `beta = tan(omega0 / (2 q))` — the convention
/// used by the common scientific-Python design routine, so coefficients
/// match that reference bit-for-bit.
pub fn design_notch(f0: f64, q: f64, fs: f64) -> Result<SosFilter> {
    check_corner(f0, fs)?;
    if !q.is_finite() || q <= 0.0 {
        return Err(Error::InvalidParameter(format!("notch Q must be positive, got {q}")));
    }
    let omega = 2.0 * std::f64::consts::PI * f0 / fs;
    let beta = (omega / (2.0 * q)).tan();
    let gain = 1.0 / (1.0 + beta);
    let cos = omega.cos();
    Ok(SosFilter {
        sections: vec![Biquad {
            b0: gain,
            b1: -2.0 * gain * cos,
            b2: gain,
            a1: -2.0 * gain * cos,
            a2: 2.0 * gain - 1.0,
        }],
    })
}

/// Butterworth band-pass of prototype order `order` (so `2 * order` poles).
pub fn design_butter_bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::InvalidParameter("filter order must be >= 1".into()));
    }
    check_corner(low, fs)?;
    check_corner(high, fs)?;
    if low >= high {
        return Err(Error::InvalidBand { low, high });
    }
    let wl = prewarp(low, fs);
    let wh = prewarp(high, fs);
    let w0 = (wl * wh).sqrt();
    let bw = wh - wl;

    // Low-pass prototype poles on the unit circle, mapped to band-pass pairs:
    // each prototype pole p yields the two roots of s^2 - (bw p) s + w0^2.
    let mut poles = Vec::with_capacity(2 * order);
    for p in butterworth_poles(order) {
        let b = p * bw * 0.5;
        let d = (b * b - Complex64::new(w0 * w0, 0.0)).sqrt();
        poles.push(b + d);
        poles.push(b - d);
    }
    // `order` zeros at s = 0; the remaining `order` zeros sit at infinity and
    // land on z = -1 after the bilinear transform.
    let zeros = vec![Complex64::new(0.0, 0.0); order];
    let gain = bw.powi(order as i32);
    bilinear_zpk(&zeros, &poles, gain, fs)
}

/// Butterworth high-pass of order `order`.
pub fn design_butter_highpass(order: usize, cutoff: f64, fs: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::InvalidParameter("filter order must be >= 1".into()));
    }
    check_corner(cutoff, fs)?;
    let wc = prewarp(cutoff, fs);
    // s -> wc / s: poles map to wc / p, zeros appear at the origin.
    let poles: Vec<Complex64> = butterworth_poles(order).iter().map(|p| wc / p).collect();
    let zeros = vec![Complex64::new(0.0, 0.0); order];
    // Prototype gain 1; |prod(poles)| == 1 for Butterworth, and the transform
    // keeps unit gain at s = infinity, which bilinear maps to Nyquist.
    bilinear_zpk(&zeros, &poles, 1.0, fs)
}

/// Normalized analog Butterworth poles (left half-plane, unit cutoff).
fn butterworth_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * order) as f64
                + std::f64::consts::FRAC_PI_2;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn prewarp(freq: f64, fs: f64) -> f64 {
    2.0 * fs * (std::f64::consts::PI * freq / fs).tan()
}

/// Bilinear transform of an analog zero-pole-gain design into a digital
/// cascade of second-order sections.
fn bilinear_zpk(zeros: &[Complex64], poles: &[Complex64], gain: f64, fs: f64) -> Result<SosFilter> {
    let fs2 = 2.0 * fs;
    let map = |r: &Complex64| (fs2 + r) / (fs2 - r);
    let mut zd: Vec<Complex64> = zeros.iter().map(map).collect();
    let pd: Vec<Complex64> = poles.iter().map(map).collect();

    let mut k = Complex64::new(gain, 0.0);
    for z in zeros {
        k *= fs2 - z;
    }
    for p in poles {
        k /= fs2 - p;
    }
    let k = k.re;

    // Zeros at analog infinity land on z = -1.
    while zd.len() < pd.len() {
        zd.push(Complex64::new(-1.0, 0.0));
    }

    let pole_pairs = conjugate_pairs(&pd)?;
    let mut sections = Vec::with_capacity(pole_pairs.len());
    let mut free_zeros = zd;
    for (i, pair) in pole_pairs.iter().enumerate() {
        let wanted = match pair {
            RootPair::Conjugate(_) | RootPair::TwoReal(_, _) => 2,
            RootPair::OneReal(_) => 1,
        };
        let mut zs = Vec::with_capacity(wanted);
        let anchor = pair.anchor();
        for _ in 0..wanted.min(free_zeros.len()) {
            let (idx, _) = free_zeros
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - anchor)
                        .norm()
                        .partial_cmp(&(*b - anchor).norm())
                        .unwrap()
                })
                .unwrap();
            zs.push(free_zeros.swap_remove(idx));
        }
        let (b0, b1, b2) = real_poly(&zs);
        let (_, a1, a2) = match pair {
            RootPair::Conjugate(p) => real_poly(&[*p, p.conj()]),
            RootPair::TwoReal(p, q) => real_poly(&[*p, *q]),
            RootPair::OneReal(p) => real_poly(&[*p]),
        };
        let scale = if i == 0 { k } else { 1.0 };
        sections.push(Biquad {
            b0: scale * b0,
            b1: scale * b1,
            b2: scale * b2,
            a1,
            a2,
        });
    }
    Ok(SosFilter { sections })
}

enum RootPair {
    Conjugate(Complex64),
    TwoReal(Complex64, Complex64),
    OneReal(Complex64),
}

impl RootPair {
    fn anchor(&self) -> Complex64 {
        match self {
            RootPair::Conjugate(p) | RootPair::OneReal(p) | RootPair::TwoReal(p, _) => *p,
        }
    }
}

/// Group roots into conjugate pairs (plus real leftovers), ordered so the
/// pair closest to the unit circle forms the last section.
fn conjugate_pairs(roots: &[Complex64]) -> Result<Vec<RootPair>> {
    const TOL: f64 = 1e-9;
    let mut complex: Vec<Complex64> = roots.iter().copied().filter(|r| r.im > TOL).collect();
    let negatives: Vec<Complex64> = roots.iter().copied().filter(|r| r.im < -TOL).collect();
    let mut reals: Vec<Complex64> = roots.iter().copied().filter(|r| r.im.abs() <= TOL).collect();
    if complex.len() != negatives.len() {
        return Err(Error::InvalidParameter(
            "complex roots do not occur in conjugate pairs".into(),
        ));
    }
    for c in &complex {
        if !negatives.iter().any(|n| (n.conj() - c).norm() < 1e-6 * c.norm().max(1.0)) {
            return Err(Error::InvalidParameter(
                "complex roots do not occur in conjugate pairs".into(),
            ));
        }
    }
    complex.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    reals.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let mut pairs: Vec<RootPair> = complex.into_iter().map(RootPair::Conjugate).collect();
    let mut reals = reals.into_iter();
    while let Some(p) = reals.next() {
        match reals.next() {
            Some(q) => pairs.push(RootPair::TwoReal(p, q)),
            None => pairs.push(RootPair::OneReal(p)),
        }
    }
    pairs.sort_by(|a, b| a.anchor().norm().partial_cmp(&b.anchor().norm()).unwrap());
    Ok(pairs)
}

/// Expand `(z - r1)(z - r2)...` into real `1 + c1 z^-1 + c2 z^-2` form.
fn real_poly(roots: &[Complex64]) -> (f64, f64, f64) {
    match roots.len() {
        0 => (1.0, 0.0, 0.0),
        1 => (1.0, -roots[0].re, 0.0),
        2 => {
            let sum = roots[0] + roots[1];
            let prod = roots[0] * roots[1];
            (1.0, -sum.re, prod.re)
        }
        _ => unreachable!("sections are at most second order"),
    }
}

/// Steady-state section states for a unit-level DC input, ordered to match
/// the cascade. Each section's state is scaled by the DC gain accumulated
/// through the sections before it.
fn steady_state(sections: &[Biquad]) -> Vec<[f64; 2]> {
    let mut level = 1.0;
    sections
        .iter()
        .map(|s| {
            let h = s.dc_gain();
            let z2 = s.b2 - s.a2 * h;
            let z1 = s.b1 + s.b2 - (s.a1 + s.a2) * h;
            let state = [z1 * level, z2 * level];
            level *= h;
            state
        })
        .collect()
}

/// Run the cascade once over `x` (transposed direct form II), starting each
/// section from `zi` scaled by `scale`.
fn sosfilt(sections: &[Biquad], x: &[f64], zi: &[[f64; 2]], scale: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    for (s, z) in sections.iter().zip(zi) {
        let mut z1 = z[0] * scale;
        let mut z2 = z[1] * scale;
        for v in y.iter_mut() {
            let xin = *v;
            let out = s.b0 * xin + z1;
            z1 = s.b1 * xin - s.a1 * out + z2;
            z2 = s.b2 * xin - s.a2 * out;
            *v = out;
        }
    }
    y
}

/// Zero-phase filtering: forward pass, backward pass, edge handling by odd
/// reflection of `3 x order` samples and steady-state initialization.
///
/// The result has the squared magnitude response of the cascade and no phase
/// distortion; symmetric features (like a centered pulse) keep their
/// position. Requires `x.len() > 3 * order`.
pub fn filtfilt(filter: &SosFilter, x: &[f64]) -> Result<Vec<f64>> {
    let padlen = 3 * filter.order();
    if x.len() <= padlen {
        return Err(Error::SignalTooShort {
            len: x.len(),
            min: padlen + 1,
        });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * padlen);
    for i in 0..padlen {
        ext.push(2.0 * x[0] - x[padlen - i]);
    }
    ext.extend_from_slice(x);
    for i in 0..padlen {
        ext.push(2.0 * x[n - 1] - x[n - 2 - i]);
    }

    let zi = steady_state(filter.sections());
    let mut y = sosfilt(filter.sections(), &ext, &zi, ext[0]);
    y.reverse();
    let first = y[0];
    let mut y = sosfilt(filter.sections(), &y, &zi, first);
    y.reverse();
    y.drain(..padlen);
    y.truncate(n);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn notch_matches_reference_coefficients() {
        // iirnotch(50, 30, fs=500) from an established DSP library.
        let f = design_notch(50.0, 30.0, 500.0).unwrap();
        let s = f.sections()[0];
        assert_relative_eq!(s.b0, 0.98963617536289206, max_relative = 1e-14);
        assert_relative_eq!(s.b1, -1.6012649682336106, max_relative = 1e-14);
        assert_relative_eq!(s.b2, 0.98963617536289206, max_relative = 1e-14);
        assert_relative_eq!(s.a1, -1.6012649682336106, max_relative = 1e-14);
        assert_relative_eq!(s.a2, 0.97927235072578411, max_relative = 1e-14);
    }

    #[test]
    fn notch_magnitude_response_matches_reference() {
        let f = design_notch(50.0, 30.0, 500.0).unwrap();
        let expected = [
            (10.0, 0.999974307348),
            (49.0, 0.770975821447),
            (51.0, 0.765529370988),
            (60.0, 0.996013810958),
            (100.0, 0.999801663605),
        ];
        for (freq, mag) in expected {
            assert_relative_eq!(f.magnitude_at(freq, 500.0), mag, max_relative = 1e-9);
        }
        assert!(f.magnitude_at(50.0, 500.0) < 1e-12, "gain at the notch frequency");
        assert_relative_eq!(f.sections()[0].dc_gain(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bandpass_magnitude_response_matches_reference() {
        // butter(4, [0.5, 100], 'bandpass', fs=500) single-pass magnitudes.
        let f = design_butter_bandpass(4, 0.5, 100.0, 500.0).unwrap();
        let expected = [
            (0.05, 9.82972875257e-05),
            (0.5, 0.70710678119),
            (1.0, 0.998246168581),
            (5.0, 0.999999999945),
            (10.0, 0.999999999998),
            (50.0, 0.999305371077),
            (100.0, 0.707106781187),
            (150.0, 0.0764507625294),
            (200.0, 0.00305518157259),
        ];
        for (freq, mag) in expected {
            assert_relative_eq!(f.magnitude_at(freq, 500.0), mag, max_relative = 1e-8);
        }
        assert_eq!(f.order(), 8);
    }

    #[test]
    fn highpass_magnitude_response_matches_reference() {
        // butter(2, 0.05, 'highpass', fs=250) single-pass magnitudes.
        let f = design_butter_highpass(2, 0.05, 250.0).unwrap();
        let expected = [
            (0.01, 0.0399680282584),
            (0.05, 0.70710678119),
            (0.5, 0.999950006355),
            (1.0, 0.999996875671),
            (10.0, 0.999999999694),
        ];
        for (freq, mag) in expected {
            assert_relative_eq!(f.magnitude_at(freq, 250.0), mag, max_relative = 1e-8);
        }
    }

    #[test]
    fn design_rejects_bad_corners() {
        assert!(matches!(
            design_notch(250.0, 30.0, 500.0),
            Err(Error::FrequencyAboveNyquist { .. })
        ));
        assert!(matches!(
            design_notch(50.0, 30.0, 0.0),
            Err(Error::InvalidSampleRate(_))
        ));
        assert!(matches!(
            design_butter_bandpass(4, 100.0, 0.5, 500.0),
            Err(Error::InvalidBand { .. })
        ));
        assert!(matches!(
            design_butter_bandpass(4, 0.5, 300.0, 500.0),
            Err(Error::FrequencyAboveNyquist { .. })
        ));
        assert!(matches!(
            design_butter_highpass(0, 0.05, 250.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn filtfilt_matches_reference_zero_phase_output() {
        // sosfiltfilt(iirnotch(50, 30, fs=500), x, padlen=6) on a 64-sample
        // two-tone signal, values from an established DSP library.
        let n = 64;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                (2.0 * std::f64::consts::PI * 7.0 * t).sin()
                    + 0.5 * (2.0 * std::f64::consts::PI * 3.0 * t).cos()
            })
            .collect();
        let expected = [
            0.33776568649215022,
            0.96286914433868009,
            1.3180274963393508,
            1.2245673017053358,
            0.69552933355530278,
            -0.06979018027456993,
            -0.77442949103684677,
            -1.1547930850134498,
            -1.0947458015025764,
            -0.67173291518403455,
            -0.11522876084441094,
            0.3022689262551313,
            0.39117304506418171,
            0.13010418205915431,
            -0.32780754056301775,
            -0.72949913421857882,
            -0.84233199900324385,
            -0.56450347401162226,
            0.025210626190273644,
            0.70095062162478194,
            1.1907949003845095,
            1.2987665829747284,
            0.99195175297892169,
            0.41316949872424824,
            -0.18602479322321602,
            -0.56068573550702161,
            -0.58289196205749882,
            -0.29656618685448355,
            0.10805925312861064,
            0.38789877119512406,
            0.36461878842382117,
            0.011549234277244191,
            -0.53066769329421692,
            -1.0172389602347931,
            -1.212196848540247,
            -0.9989865605977456,
            -0.43732271384560406,
            0.26043527686952811,
            0.82308730970099808,
            1.0418115230757907,
            0.8631524449575354,
            0.41086575580334195,
            -0.073687525579691882,
            -0.34535164245213801,
            -0.27073106890286558,
            0.10813987102945635,
            0.59205588403874654,
            0.91721034512701505,
            0.87996175625681683,
            0.43627161614079357,
            -0.27076144113333167,
            -0.96931014935645599,
            -1.3778218565426747,
            -1.3310511194185615,
            -0.85557967745205432,
            -0.15963606617220388,
            0.45923687725293949,
            0.74754778836466818,
            0.60992491829462958,
            0.15168173234314736,
            -0.37027280930946982,
            -0.66671820303737328,
            -0.55183526177753073,
            -0.033410424125796222,
        ];
        let f = design_notch(50.0, 30.0, 500.0).unwrap();
        let y = filtfilt(&f, &x).unwrap();
        for (got, want) in y.iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn notch_passes_dc_exactly() {
        let f = design_notch(50.0, 30.0, 500.0).unwrap();
        let x = vec![0.7; 500];
        let y = filtfilt(&f, &x).unwrap();
        for v in y {
            assert_relative_eq!(v, 0.7, max_relative = 1e-6);
        }
    }

    /// RMS over the settled region, excluding one second per edge where the
    /// forward/backward startup transients live.
    fn steady_rms(x: &[f64], fs: f64) -> f64 {
        let skip = fs as usize;
        rms(&x[skip..x.len() - skip])
    }

    #[test]
    fn notch_removes_its_target_tone() {
        let fs = 500.0;
        let f = design_notch(50.0, 30.0, fs).unwrap();
        let x = sine(50.0, fs, 5000);
        let y = filtfilt(&f, &x).unwrap();
        let ratio = steady_rms(&y, fs) / steady_rms(&x, fs);
        assert!(ratio <= 0.03, "50 Hz residual RMS ratio {ratio}");
        // A 5 Hz tone positioned well away from the notch is preserved.
        let x5 = sine(5.0, fs, 5000);
        let y5 = filtfilt(&f, &x5).unwrap();
        assert_relative_eq!(steady_rms(&y5, fs), steady_rms(&x5, fs), max_relative = 0.01);
    }

    #[test]
    fn bandpass_removes_dc_offset() {
        let fs = 500.0;
        let f = design_butter_bandpass(4, 0.5, 100.0, fs).unwrap();
        let x = vec![5.0; 5000];
        let y = filtfilt(&f, &x).unwrap();
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak <= 0.05, "5 mV DC leaves residual {peak} mV (needs >= 40 dB)");
    }

    #[test]
    fn bandpass_attenuates_out_of_band_tone() {
        let fs = 500.0;
        let f = design_butter_bandpass(4, 0.5, 100.0, fs).unwrap();
        let x = sine(200.0, fs, 5000);
        let y = filtfilt(&f, &x).unwrap();
        let ratio = steady_rms(&y, fs) / steady_rms(&x, fs);
        assert!(ratio <= 0.1, "200 Hz ratio {ratio} (needs >= 20 dB)");
        let x10 = sine(10.0, fs, 5000);
        let y10 = filtfilt(&f, &x10).unwrap();
        assert_relative_eq!(steady_rms(&y10, fs), steady_rms(&x10, fs), max_relative = 0.01);
    }

    #[test]
    fn highpass_cancels_constant_baseline() {
        let f = design_butter_highpass(2, 0.05, 250.0).unwrap();
        let x = vec![1.0; 2500];
        let y = filtfilt(&f, &x).unwrap();
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak <= 0.01, "1 mV DC leaves residual {peak} mV (needs >= 40 dB)");
    }

    #[test]
    fn zero_phase_keeps_symmetric_pulse_centered() {
        let fs = 500.0;
        let n = 1001;
        let center = 500;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let d = (i as isize - center as isize) as f64;
                (-d * d / 200.0).exp()
            })
            .collect();
        let f = design_butter_bandpass(4, 0.5, 100.0, fs).unwrap();
        let y = filtfilt(&f, &x).unwrap();
        let argmax = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, center, "peak moved: zero-phase property violated");
    }

    #[test]
    fn filtfilt_is_linear() {
        let fs = 500.0;
        let f = design_butter_bandpass(4, 0.5, 100.0, fs).unwrap();
        let x = sine(12.0, fs, 800);
        let y = sine(31.0, fs, 800);
        let (a, b) = (1.7, -0.6);
        let combined: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = filtfilt(&f, &combined).unwrap();
        let fx = filtfilt(&f, &x).unwrap();
        let fy = filtfilt(&f, &y).unwrap();
        let rhs: Vec<f64> = fx.iter().zip(&fy).map(|(u, v)| a * u + b * v).collect();
        let num: f64 = lhs.iter().zip(&rhs).map(|(u, v)| (u - v) * (u - v)).sum();
        let den: f64 = rhs.iter().map(|v| v * v).sum();
        assert!((num / den).sqrt() < 1e-6, "linearity violated");
    }

    #[test]
    fn filtfilt_rejects_short_signals() {
        let f = design_butter_bandpass(4, 0.5, 100.0, 500.0).unwrap();
        let x = vec![0.0; 24]; // needs > 3 * 8
        assert!(matches!(
            filtfilt(&f, &x),
            Err(Error::SignalTooShort { len: 24, min: 25 })
        ));
    }
}
