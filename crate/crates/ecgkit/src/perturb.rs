//! Robustness perturbation: probabilistic Gaussian noise plus sinusoidal
//! baseline wander.
//!
//! Each record is independently selected for perturbation with probability
//! `p_noise`. A selected record receives i.i.d. zero-mean Gaussian noise with
//! standard deviation `noise_scale * sigma_x` on every sample, where
//! `sigma_x` is the sample standard deviation pooled over the whole `C x L`
//! record *before* any noise is added. A further independent draw then adds
//! baseline wander with probability `p_wander`: the same sinusoid
//! `w(t) = A * sin(phi * t / (L - 1))` is superimposed on every lead, with
//! amplitude `A = wander_amp * max|x|` (again over the clean record) and
//! total phase `phi` drawn uniformly from `[phase_low, phase_high]`.
//!
//! Randomness is counter-based: [`record_rng`] keys an independent ChaCha8
//! stream by `(seed, record_index)`, so a corpus can be perturbed in
//! parallel, in any order, with bit-identical results.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::EcgRecord;

/// Noise and wander parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    /// Probability that a record is perturbed at all.
    pub p_noise: f64,
    /// Noise standard deviation as a fraction of the record's sample std.
    pub noise_scale: f64,
    /// Probability of adding wander, given the record was selected.
    pub p_wander: f64,
    /// Wander amplitude as a fraction of the record's max absolute sample.
    pub wander_amp: f64,
    /// Total accumulated phase across the record, drawn uniformly.
    pub phase_low: f64,
    pub phase_high: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            p_noise: 0.5,
            noise_scale: 0.05,
            p_wander: 0.5,
            wander_amp: 0.07,
            phase_low: std::f64::consts::PI,
            phase_high: 5.0 * std::f64::consts::PI,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_noise", self.p_noise), ("p_wander", self.p_wander)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        for (name, s) in [
            ("noise_scale", self.noise_scale),
            ("wander_amp", self.wander_amp),
        ] {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {s} must be a finite non-negative number"
                )));
            }
        }
        if !self.phase_low.is_finite()
            || !self.phase_high.is_finite()
            || self.phase_low > self.phase_high
        {
            return Err(Error::InvalidParameter(format!(
                "phase range [{}, {}] is invalid",
                self.phase_low, self.phase_high
            )));
        }
        Ok(())
    }
}

/// Which perturbations were actually applied to a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedFlags {
    pub noise: bool,
    pub wander: bool,
}

/// Independent RNG stream for one record, keyed by `(seed, record_index)`.
pub fn record_rng(seed: u64, record_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record_index);
    rng
}

/// Pooled sample standard deviation (n - 1 denominator) over all leads.
fn pooled_std(record: &EcgRecord) -> f64 {
    let n = (record.num_leads() * record.samples_per_lead()) as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean: f64 = record.rows().iter().flatten().sum::<f64>() / n;
    let ss: f64 = record
        .rows()
        .iter()
        .flatten()
        .map(|&v| (v - mean) * (v - mean))
        .sum();
    (ss / (n - 1.0)).sqrt()
}

fn pooled_max_abs(record: &EcgRecord) -> f64 {
    record
        .rows()
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Apply the two-stage perturbation using draws from `rng`.
///
/// Draw order is fixed: selection uniform, then one Gaussian per sample in
/// lead-major order, then the wander uniform, then the phase. Skipped stages
/// consume no draws, so flag combinations are reproducible from the stream.
pub fn perturb(
    record: &EcgRecord,
    config: &PerturbationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(EcgRecord, AppliedFlags)> {
    config.validate()?;
    let u1: f64 = rng.gen();
    if u1 >= config.p_noise {
        return Ok((
            record.clone(),
            AppliedFlags {
                noise: false,
                wander: false,
            },
        ));
    }

    let sigma = config.noise_scale * pooled_std(record);
    let amp = config.wander_amp * pooled_max_abs(record);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
    let mut rows: Vec<Vec<f64>> = record
        .rows()
        .iter()
        .map(|row| row.iter().map(|&v| v + normal.sample(rng)).collect())
        .collect();

    let u2: f64 = rng.gen();
    let wander = u2 < config.p_wander;
    if wander {
        let phi = if config.phase_high > config.phase_low {
            rng.gen_range(config.phase_low..config.phase_high)
        } else {
            config.phase_low
        };
        let len = record.samples_per_lead();
        let wander_wave: Vec<f64> = (0..len)
            .map(|t| {
                // A single sample has no extent to accumulate phase over.
                let frac = if len > 1 { t as f64 / (len - 1) as f64 } else { 0.0 };
                amp * (phi * frac).sin()
            })
            .collect();
        for row in rows.iter_mut() {
            for (v, w) in row.iter_mut().zip(&wander_wave) {
                *v += w;
            }
        }
    }

    let perturbed = EcgRecord::new(record.leads().to_vec(), record.fs(), rows)?;
    Ok((
        perturbed,
        AppliedFlags {
            noise: true,
            wander,
        },
    ))
}

/// Convenience wrapper: perturb one record of a corpus reproducibly.
pub fn perturb_indexed(
    record: &EcgRecord,
    config: &PerturbationConfig,
    seed: u64,
    record_index: u64,
) -> Result<(EcgRecord, AppliedFlags)> {
    let mut rng = record_rng(seed, record_index);
    perturb(record, config, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::CANONICAL_LEADS;

    fn test_record(len: usize) -> EcgRecord {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|c| {
                (0..len)
                    .map(|t| ((c + 1) as f64 * t as f64 * 0.05).sin())
                    .collect()
            })
            .collect();
        EcgRecord::new(CANONICAL_LEADS.to_vec(), 250.0, rows).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let rec = test_record(200);
        let cfg = PerturbationConfig {
            p_noise: 0.0,
            p_wander: 1.0,
            ..PerturbationConfig::default()
        };
        for index in 0..20 {
            let (out, flags) = perturb_indexed(&rec, &cfg, 99, index).unwrap();
            assert!(!flags.noise && !flags.wander);
            assert_eq!(out.rows(), rec.rows(), "index {index}");
        }
    }

    #[test]
    fn fixed_seed_is_reproducible_and_index_sensitive() {
        let rec = test_record(300);
        let cfg = PerturbationConfig {
            p_noise: 1.0,
            ..PerturbationConfig::default()
        };
        let (a1, f1) = perturb_indexed(&rec, &cfg, 7, 3).unwrap();
        let (a2, f2) = perturb_indexed(&rec, &cfg, 7, 3).unwrap();
        assert_eq!(a1.rows(), a2.rows());
        assert_eq!(f1, f2);
        let (b, _) = perturb_indexed(&rec, &cfg, 7, 4).unwrap();
        assert_ne!(a1.rows(), b.rows(), "different records get different draws");
        let (c, _) = perturb_indexed(&rec, &cfg, 8, 3).unwrap();
        assert_ne!(a1.rows(), c.rows(), "different seeds get different draws");
    }

    #[test]
    fn geometry_and_metadata_are_preserved() {
        let rec = test_record(123);
        let cfg = PerturbationConfig {
            p_noise: 1.0,
            p_wander: 1.0,
            ..PerturbationConfig::default()
        };
        let (out, flags) = perturb_indexed(&rec, &cfg, 1, 0).unwrap();
        assert!(flags.noise);
        assert_eq!(out.leads(), rec.leads());
        assert_eq!(out.fs(), rec.fs());
        assert_eq!(out.num_leads(), rec.num_leads());
        assert_eq!(out.samples_per_lead(), rec.samples_per_lead());
    }

    #[test]
    fn wander_amplitude_never_exceeds_its_bound() {
        let rec = test_record(400);
        let bound = 0.07 * rec
            .rows()
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        // Disable noise so the difference is pure wander.
        let cfg = PerturbationConfig {
            p_noise: 1.0,
            noise_scale: 0.0,
            p_wander: 1.0,
            ..PerturbationConfig::default()
        };
        for index in 0..50 {
            let (out, flags) = perturb_indexed(&rec, &cfg, 11, index).unwrap();
            assert!(flags.wander);
            for (orig_row, new_row) in rec.rows().iter().zip(out.rows()) {
                for (o, n) in orig_row.iter().zip(new_row) {
                    assert!((n - o).abs() <= bound, "wander exceeded {bound}");
                }
            }
        }
    }

    #[test]
    fn wander_is_identical_across_leads() {
        let cfg = PerturbationConfig {
            p_noise: 1.0,
            noise_scale: 0.0,
            p_wander: 1.0,
            ..PerturbationConfig::default()
        };
        let rec = test_record(256);
        let (out, _) = perturb_indexed(&rec, &cfg, 5, 2).unwrap();
        let first_delta: Vec<f64> = rec.rows()[0]
            .iter()
            .zip(&out.rows()[0])
            .map(|(o, n)| n - o)
            .collect();
        for c in 1..12 {
            let delta: Vec<f64> = rec.rows()[c]
                .iter()
                .zip(&out.rows()[c])
                .map(|(o, n)| n - o)
                .collect();
            // (v + w) - v re-rounds per sample, so allow last-ulp slack.
            for (t, (d, f)) in delta.iter().zip(&first_delta).enumerate() {
                assert!((d - f).abs() < 1e-12, "lead {c} sample {t}: {d} vs {f}");
            }
        }
        // Half to two-and-a-half cycles: the wave must actually oscillate.
        assert!(first_delta.iter().any(|&d| d > 0.0));
        assert!(first_delta.iter().any(|&d| d < 0.0));
        assert_eq!(first_delta[0], 0.0, "zero initial phase");
    }

    #[test]
    fn noise_std_tracks_the_configured_fraction() {
        let rec = test_record(2000);
        let sigma_x = pooled_std(&rec);
        let cfg = PerturbationConfig {
            p_noise: 1.0,
            p_wander: 0.0,
            ..PerturbationConfig::default()
        };
        let mut diffs = Vec::new();
        for index in 0..20 {
            let (out, _) = perturb_indexed(&rec, &cfg, 21, index).unwrap();
            for (orig_row, new_row) in rec.rows().iter().zip(out.rows()) {
                for (o, n) in orig_row.iter().zip(new_row) {
                    diffs.push(n - o);
                }
            }
        }
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        let ratio = var.sqrt() / (0.05 * sigma_x);
        assert!((ratio - 1.0).abs() < 0.02, "noise std ratio {ratio}");
    }

    #[test]
    fn selection_rates_approach_their_probabilities() {
        let rec = test_record(8);
        let cfg = PerturbationConfig::default();
        let mut noise_count = 0u32;
        let mut wander_count = 0u32;
        let trials = 4000;
        for index in 0..trials {
            let (_, flags) = perturb_indexed(&rec, &cfg, 31, index).unwrap();
            noise_count += flags.noise as u32;
            wander_count += flags.wander as u32;
            assert!(flags.noise || !flags.wander, "wander requires noise");
        }
        let noise_rate = noise_count as f64 / trials as f64;
        let wander_given_noise = wander_count as f64 / noise_count as f64;
        assert!((noise_rate - 0.5).abs() < 0.05, "noise rate {noise_rate}");
        assert!(
            (wander_given_noise - 0.5).abs() < 0.05,
            "wander rate {wander_given_noise}"
        );
    }

    #[test]
    fn single_sample_records_get_no_wander_wave() {
        let rows: Vec<Vec<f64>> = (0..12).map(|c| vec![c as f64]).collect();
        let rec = EcgRecord::new(CANONICAL_LEADS.to_vec(), 250.0, rows).unwrap();
        let cfg = PerturbationConfig {
            p_noise: 1.0,
            noise_scale: 0.0,
            p_wander: 1.0,
            ..PerturbationConfig::default()
        };
        let (out, flags) = perturb_indexed(&rec, &cfg, 3, 0).unwrap();
        assert!(flags.wander);
        assert_eq!(out.rows(), rec.rows(), "sin(0) contributes nothing");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let rec = test_record(16);
        let mut rng = record_rng(0, 0);
        for cfg in [
            PerturbationConfig {
                p_noise: 1.5,
                ..PerturbationConfig::default()
            },
            PerturbationConfig {
                noise_scale: -0.1,
                ..PerturbationConfig::default()
            },
            PerturbationConfig {
                phase_low: 10.0,
                phase_high: 1.0,
                ..PerturbationConfig::default()
            },
        ] {
            assert!(matches!(
                perturb(&rec, &cfg, &mut rng),
                Err(Error::InvalidParameter(_))
            ));
        }
    }
}
