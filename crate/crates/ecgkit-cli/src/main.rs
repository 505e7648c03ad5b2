//! `ecgkit` — drive the ECG representation pipeline from the shell:
//! preprocess raw records, train/apply the symbolic tokenizer, render
//! plot and stacked-tensor inputs, perturb corpora, assemble prompt
//! samples, and score model outputs.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::{load_config, validate_config, AssembleMode};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "ecgkit",
    version,
    about = "ECG representation pipeline: filtering, symbolic tokenization, \
             plotting, perturbation, prompt assembly, and evaluation"
)]
struct Cli {
    /// TOML pipeline configuration; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Check configuration and referenced paths, then exit without
    /// touching any outputs.
    #[arg(long, global = true)]
    validate: bool,

    /// Worker threads (also settable via ECGKIT_THREADS; the flag wins).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, denoise, resample, and segment raw records
    Preprocess {
        /// Directory of input records (*.ecgb, *.csv)
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        /// Directory for the segment files
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
        /// Sampling frequency assumed for CSV inputs
        #[arg(long)]
        csv_fs: Option<f64>,
        /// Output sampling frequency in Hz
        #[arg(long)]
        target_fs: Option<f64>,
        /// Segment duration in seconds
        #[arg(long)]
        segment_seconds: Option<f64>,
    },
    /// Train a byte-pair vocabulary on quantized records
    BpeTrain {
        /// Directory of training inputs (*.ecgb, *.csv, *.sym)
        #[arg(long, value_name = "DIR")]
        corpus: PathBuf,
        /// Where to write the vocabulary JSON
        #[arg(long, value_name = "FILE")]
        vocab_out: PathBuf,
        /// Merge rounds to learn
        #[arg(long)]
        merges: Option<usize>,
        /// Offset added to emitted token ids
        #[arg(long)]
        id_offset: Option<u32>,
    },
    /// Quantize records and encode them with a trained vocabulary
    Encode {
        /// Directory of inputs (*.ecgb, *.csv, *.sym)
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        /// Vocabulary JSON from bpe-train
        #[arg(long, value_name = "FILE")]
        vocab: PathBuf,
        /// Directory for the .sym and .tok outputs
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Expand token files back into symbol files
    Decode {
        /// Directory of token files (*.tok)
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        /// Vocabulary JSON from bpe-train
        #[arg(long, value_name = "FILE")]
        vocab: PathBuf,
        /// Directory for the .sym outputs
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Plot records as stacked-panel PNG images
    Render {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
        /// Image width in pixels
        #[arg(long)]
        width: Option<usize>,
        /// Image height in pixels
        #[arg(long)]
        height: Option<usize>,
    },
    /// Replicate records into three-channel stacked tensors
    Stack {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Apply seeded noise/baseline-wander perturbations
    Perturb {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
        /// RNG seed (defaults to the config seed)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build fixed-length training samples from conversations
    Assemble {
        /// Conversations JSONL
        #[arg(long, value_name = "FILE")]
        conversations: PathBuf,
        /// Samples JSONL to write
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Directory of .tok files named by each conversation's signal_ref
        /// (required in tokenized mode)
        #[arg(long, value_name = "DIR")]
        signals: Option<PathBuf>,
        /// Chat template: llama32, gemma2, or qwen25
        #[arg(long)]
        template: Option<String>,
        /// Fixed sample length T
        #[arg(long)]
        budget: Option<usize>,
        /// How the signal enters the sample
        #[arg(long, value_enum)]
        mode: Option<AssembleMode>,
        /// Minimum signal tokens kept under truncation
        #[arg(long)]
        min_signal: Option<usize>,
    },
    /// Score candidate lines against reference lines
    Evaluate {
        /// Candidate responses, one per line
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        /// Ground-truth references, line-aligned with the candidates
        #[arg(long, value_name = "FILE")]
        references: PathBuf,
        /// Score-table CSV to write
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Dataset label for the score rows
        #[arg(long)]
        dataset: String,
        /// Model label for the score rows
        #[arg(long)]
        model: String,
        /// Seed label for the score rows (defaults to the config seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Append to an existing score table instead of replacing it
        #[arg(long)]
        append: bool,
    },
    /// Count significant wins and report per-cell t/p values
    Significance {
        /// Score-table CSV
        #[arg(long, value_name = "FILE")]
        scores: PathBuf,
        /// Win-count CSV to write
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Significance level
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Min-max normalize model means for radar plotting
    Radar {
        /// Score-table CSV
        #[arg(long, value_name = "FILE")]
        scores: PathBuf,
        /// Normalized plot-data CSV to write
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Generate a synthetic 12-lead corpus for smoke tests and demos
    Synth {
        #[arg(long, value_name = "DIR")]
        output: PathBuf,
        /// Number of records
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// RNG seed (defaults to the config seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Sampling frequency in Hz
        #[arg(long, default_value_t = 500.0)]
        fs: f64,
        /// Record duration in seconds
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
    },
}

fn resolve_threads(flag: Option<usize>, from_config: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ECGKIT_THREADS") {
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                CliError::config(anyhow::anyhow!(
                    "ECGKIT_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
            if n == 0 {
                return Err(CliError::config(anyhow::anyhow!(
                    "ECGKIT_THREADS must be at least 1"
                )));
            }
            Ok(Some(n))
        }
        Err(_) => Ok(from_config),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = load_config(cli.config.as_deref())?;
    validate_config(&config)?;
    if let Some(n) = resolve_threads(cli.threads, config.threads)? {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already initialized: {err}");
        }
    }
    let ctx = Ctx {
        config,
        validate: cli.validate,
    };
    match cli.command {
        Command::Preprocess {
            input,
            output,
            csv_fs,
            target_fs,
            segment_seconds,
        } => commands::preprocess(&ctx, &input, &output, csv_fs, target_fs, segment_seconds),
        Command::BpeTrain {
            corpus,
            vocab_out,
            merges,
            id_offset,
        } => commands::bpe_train(&ctx, &corpus, &vocab_out, merges, id_offset),
        Command::Encode {
            input,
            vocab,
            output,
        } => commands::encode_cmd(&ctx, &input, &vocab, &output),
        Command::Decode {
            input,
            vocab,
            output,
        } => commands::decode_cmd(&ctx, &input, &vocab, &output),
        Command::Render {
            input,
            output,
            width,
            height,
        } => commands::render(&ctx, &input, &output, width, height),
        Command::Stack { input, output } => commands::stack(&ctx, &input, &output),
        Command::Perturb {
            input,
            output,
            seed,
        } => commands::perturb_cmd(&ctx, &input, &output, seed),
        Command::Assemble {
            conversations,
            output,
            signals,
            template,
            budget,
            mode,
            min_signal,
        } => commands::assemble(
            &ctx,
            &conversations,
            &output,
            signals.as_deref(),
            template.as_deref(),
            budget,
            mode,
            min_signal,
        ),
        Command::Evaluate {
            candidates,
            references,
            output,
            dataset,
            model,
            seed,
            append,
        } => commands::evaluate(
            &ctx,
            &candidates,
            &references,
            &output,
            &dataset,
            &model,
            seed.unwrap_or(ctx.config.seed),
            append,
        ),
        Command::Significance {
            scores,
            output,
            alpha,
        } => commands::significance(&ctx, &scores, &output, alpha),
        Command::Radar { scores, output } => commands::radar(&ctx, &scores, &output),
        Command::Synth {
            output,
            count,
            seed,
            fs,
            seconds,
        } => commands::synth(&ctx, &output, count, seed, fs, seconds),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err.source);
            ExitCode::from(err.code)
        }
    }
}
