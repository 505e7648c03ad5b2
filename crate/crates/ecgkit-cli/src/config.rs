//! Pipeline configuration: one TOML file drives every stage; command-line
//! flags override file values.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use ecgkit::assemble::DEFAULT_MIN_SIGNAL;
use ecgkit::eval::{MetricConfig, DEFAULT_ALPHA};
use ecgkit::perturb::PerturbationConfig;
use ecgkit::preprocess::PreprocessConfig;
use ecgkit::render::RenderConfig;
use ecgkit::symbolic::BpeTrainConfig;

use crate::error::{CliError, CliResult};

/// How the signal enters an assembled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AssembleMode {
    /// One placeholder position, filled by projected embeddings downstream.
    Latent,
    /// The signal's BPE token ids spliced into the prompt.
    Tokenized,
}

/// Prompt-assembly settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssembleConfig {
    /// Chat template: llama32, gemma2, or qwen25.
    pub template: String,
    /// Fixed sample length T.
    pub budget: usize,
    pub mode: AssembleMode,
    /// Minimum signal tokens kept under truncation (tokenized mode).
    pub min_signal: usize,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        AssembleConfig {
            template: "llama32".into(),
            budget: 1024,
            mode: AssembleMode::Tokenized,
            min_signal: DEFAULT_MIN_SIGNAL,
        }
    }
}

/// Metric tokenization and significance settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub lowercase: bool,
    pub split_punctuation: bool,
    /// Significance level for win counting.
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            lowercase: true,
            split_punctuation: true,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl EvalConfig {
    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            lowercase: self.lowercase,
            split_punctuation: self.split_punctuation,
        }
    }
}

/// Whole-pipeline manifest. Every section has working defaults; an empty
/// file (or no file) runs the standard pipeline.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Base RNG seed for seeded commands (perturb, synth) when no --seed
    /// flag is given.
    pub seed: u64,
    /// Worker threads; unset uses the rayon default.
    pub threads: Option<usize>,
    /// Sampling frequency assumed for CSV inputs (they carry none).
    pub csv_fs: Option<f64>,
    pub preprocess: PreprocessConfig,
    pub symbolic: BpeTrainConfig,
    pub render: RenderConfig,
    pub perturb: PerturbationConfig,
    pub assemble: AssembleConfig,
    pub eval: EvalConfig,
}

/// Load the TOML config, or defaults when no path is given. Unknown keys
/// are rejected.
pub fn load_config(path: Option<&Path>) -> CliResult<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(CliError::config)?;
    toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(CliError::config)
}

/// Semantic checks beyond what serde can express. Runs on every
/// invocation so a bad manifest fails fast with exit code 2.
pub fn validate_config(config: &PipelineConfig) -> CliResult<()> {
    let fail = |message: String| Err(CliError::config(anyhow::anyhow!(message)));
    if config.threads == Some(0) {
        return fail("threads must be at least 1".into());
    }
    if let Some(fs) = config.csv_fs {
        if !(fs.is_finite() && fs > 0.0) {
            return fail(format!("csv_fs must be positive, got {fs}"));
        }
    }
    let p = &config.preprocess;
    for (name, value) in [
        ("preprocess.notch_q", p.notch_q),
        ("preprocess.bandpass_low", p.bandpass_low),
        ("preprocess.highpass_cutoff", p.highpass_cutoff),
        ("preprocess.target_fs", p.target_fs),
        ("preprocess.segment_seconds", p.segment_seconds),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return fail(format!("{name} must be positive, got {value}"));
        }
    }
    if p.bandpass_low >= p.bandpass_high {
        return fail(format!(
            "preprocess band-pass corners must satisfy low < high, got {} >= {}",
            p.bandpass_low, p.bandpass_high
        ));
    }
    if p.bandpass_order == 0 || p.highpass_order == 0 {
        return fail("preprocess filter orders must be at least 1".into());
    }
    if p.wavelet_levels == 0 {
        return fail("preprocess.wavelet_levels must be at least 1".into());
    }
    let r = &config.render;
    if r.width == 0 || r.height < 12 {
        return fail(format!(
            "render dimensions too small: {}x{} (need width >= 1, height >= 12)",
            r.width, r.height
        ));
    }
    if !(0.0..0.5).contains(&r.margin) {
        return fail(format!("render.margin must be in [0, 0.5), got {}", r.margin));
    }
    config.perturb.validate().map_err(CliError::config)?;
    let a = &config.assemble;
    a.template
        .parse::<ecgkit::assemble::ChatTemplate>()
        .map_err(CliError::config)?;
    if a.budget == 0 {
        return fail("assemble.budget must be positive".into());
    }
    let e = &config.eval;
    if !(e.alpha > 0.0 && e.alpha < 1.0) {
        return fail(format!("eval.alpha must be in (0, 1), got {}", e.alpha));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_load_and_validate() {
        let config = load_config(None).unwrap();
        validate_config(&config).unwrap();
        assert_eq!(config.symbolic.num_merges, 5000);
        assert_eq!(config.assemble.budget, 1024);
        assert_eq!(config.assemble.min_signal, 500);
        assert_eq!(config.eval.alpha, 0.05);
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.toml");
        std::fs::write(
            &path,
            r#"
seed = 9
csv_fs = 400.0

[preprocess]
target_fs = 125.0

[symbolic]
num_merges = 100

[assemble]
template = "qwen25"
mode = "latent"
budget = 512

[eval]
alpha = 0.01
"#,
        )
        .unwrap();
        let config = load_config(Some(&path)).unwrap();
        validate_config(&config).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.csv_fs, Some(400.0));
        assert_eq!(config.preprocess.target_fs, 125.0);
        // Unset keys keep their defaults.
        assert_eq!(config.preprocess.segment_seconds, 5.0);
        assert_eq!(config.symbolic.num_merges, 100);
        assert_eq!(config.assemble.mode, AssembleMode::Latent);
        assert_eq!(config.assemble.budget, 512);
        assert_eq!(config.eval.alpha, 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "not_a_real_key = 1\n").unwrap();
        let err = load_config(Some(&path)).unwrap_err();
        assert_eq!(err.code, crate::error::EXIT_CONFIG);
        std::fs::write(&path, "[preprocess]\nmystery = 2\n").unwrap();
        assert!(load_config(Some(&path)).is_err());
    }

    #[test]
    fn semantic_validation_catches_bad_values() {
        let mut config = PipelineConfig::default();
        config.preprocess.bandpass_low = 200.0;
        assert!(validate_config(&config).is_err());

        let mut config = PipelineConfig::default();
        config.assemble.template = "mistral".into();
        assert!(validate_config(&config).is_err());

        let mut config = PipelineConfig::default();
        config.eval.alpha = 1.5;
        assert!(validate_config(&config).is_err());

        let mut config = PipelineConfig::default();
        config.perturb.p_noise = 2.0;
        assert!(validate_config(&config).is_err());

        let mut config = PipelineConfig::default();
        config.render.margin = 0.5;
        assert!(validate_config(&config).is_err());

        let mut config = PipelineConfig::default();
        config.threads = Some(0);
        assert!(validate_config(&config).is_err());
    }
}
