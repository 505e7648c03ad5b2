//! Implementations of the subcommands. Each takes the effective
//! configuration (file values already merged with flag overrides by the
//! caller where noted), reads inputs in sorted filename order, and writes
//! artifacts deterministically.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use rayon::prelude::*;

use ecgkit::assemble::{
    assemble_latent, assemble_tokenized, read_conversations, write_samples, ChatTemplate,
    WhitespaceTokenizer,
};
use ecgkit::eval::{
    accuracy, bleu4, cell_reports, count_significant_wins, meteor_simplified,
    normalize_radar, read_scores, rouge_l, tokenize_for_metrics, write_radar, write_scores,
    write_wins, ScoreRow,
};
use ecgkit::io::{read_record, write_record, RecordFormat};
use ecgkit::perturb::{perturb_indexed, record_rng};
use ecgkit::preprocess::{normalize_record, run_pipeline};
use ecgkit::record::{EcgRecord, CANONICAL_LEADS};
use ecgkit::render::{render_plot, stack_signal, write_stacked};
use ecgkit::symbolic::{
    decode, encode, quantize, read_symbols, read_tokens, train_bpe, write_symbols,
    write_tokens, BpeVocab, SymbolSequence,
};

use crate::config::{AssembleMode, PipelineConfig};
use crate::error::{CliError, CliResult};

/// Effective invocation context.
pub struct Ctx {
    pub config: PipelineConfig,
    /// Check configuration and input paths, then exit without writing.
    pub validate: bool,
}

/// In validate mode: confirm the inputs exist and report without running.
fn confirm_only(ctx: &Ctx, command: &str, inputs: &[&Path]) -> CliResult<()> {
    debug_assert!(ctx.validate);
    for path in inputs {
        if !path.exists() {
            return Err(CliError::config(anyhow!(
                "{command}: referenced path {} does not exist",
                path.display()
            )));
        }
    }
    println!("configuration OK ({command})");
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "record".into())
}

/// Files under `dir` with one of `extensions`, sorted by name so output
/// ordering never depends on directory enumeration or completion order.
fn sorted_inputs(dir: &Path, extensions: &[&str]) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::io(anyhow!("reading directory {}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::io(anyhow!("reading directory {}: {e}", dir.display())))?
            .path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .map_or(false, |e| extensions.contains(&e));
        if matches {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::validation(anyhow!(
            "no *.{} files in {}",
            extensions.join("/*."),
            dir.display()
        )));
    }
    Ok(paths)
}

fn read_any_record(path: &Path, csv_fs: Option<f64>) -> CliResult<EcgRecord> {
    let format = RecordFormat::from_path(path).ok_or_else(|| {
        CliError::validation(anyhow!("unrecognized record format: {}", path.display()))
    })?;
    read_record(path, format, csv_fs)
        .map_err(|e| CliError::from(e).context(format!("reading {}", path.display())))
}

/// Load a record (or a ready-made symbol file) as a quantized symbol
/// sequence.
fn load_symbols(path: &Path, csv_fs: Option<f64>) -> CliResult<SymbolSequence> {
    let wrap = |e: ecgkit::Error| CliError::from(e).context(format!("reading {}", path.display()));
    if path.extension().and_then(|e| e.to_str()) == Some("sym") {
        let file = File::open(path)?;
        return read_symbols(BufReader::new(file)).map_err(wrap);
    }
    let record = read_any_record(path, csv_fs)?;
    let normalized = normalize_record(&record).map_err(wrap)?;
    quantize(&normalized).map_err(wrap)
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(anyhow!("creating directory {}: {e}", dir.display())))
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(anyhow!("creating {}: {e}", parent.display())))?;
        }
    }
    let file = File::create(path)
        .map_err(|e| CliError::io(anyhow!("creating {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn open_file(path: &Path) -> CliResult<BufReader<File>> {
    let file = File::open(path)
        .map_err(|e| CliError::io(anyhow!("opening {}: {e}", path.display())))?;
    Ok(BufReader::new(file))
}

pub fn preprocess(
    ctx: &Ctx,
    input: &Path,
    output: &Path,
    csv_fs: Option<f64>,
    target_fs: Option<f64>,
    segment_seconds: Option<f64>,
) -> CliResult<()> {
    let mut cfg = ctx.config.preprocess.clone();
    if let Some(v) = target_fs {
        cfg.target_fs = v;
    }
    if let Some(v) = segment_seconds {
        cfg.segment_seconds = v;
    }
    let csv_fs = csv_fs.or(ctx.config.csv_fs);
    if ctx.validate {
        return confirm_only(ctx, "preprocess", &[input]);
    }
    let paths = sorted_inputs(input, &["ecgb", "csv"])?;
    create_out_dir(output)?;
    let processed: CliResult<Vec<(String, Vec<EcgRecord>)>> = paths
        .par_iter()
        .map(|path| {
            let record = read_any_record(path, csv_fs)?;
            let segments = run_pipeline(&record, &cfg)
                .map_err(|e| CliError::from(e).context(format!("processing {}", path.display())))?;
            Ok((stem(path), segments))
        })
        .collect();
    let mut written = 0usize;
    for (name, segments) in processed? {
        if segments.is_empty() {
            log::warn!("{name}: shorter than one {}s segment, nothing written", cfg.segment_seconds);
        }
        for (k, segment) in segments.iter().enumerate() {
            let path = output.join(format!("{name}_seg{k:02}.ecgb"));
            write_record(segment, &path, RecordFormat::EcgbV1)?;
            written += 1;
        }
    }
    log::info!(
        "preprocessed {} records into {written} segments at {} Hz",
        paths.len(),
        cfg.target_fs
    );
    Ok(())
}

pub fn bpe_train(
    ctx: &Ctx,
    corpus: &Path,
    vocab_out: &Path,
    merges: Option<usize>,
    id_offset: Option<u32>,
) -> CliResult<()> {
    let mut cfg = ctx.config.symbolic.clone();
    if let Some(v) = merges {
        cfg.num_merges = v;
    }
    if let Some(v) = id_offset {
        cfg.id_offset = v;
    }
    if ctx.validate {
        return confirm_only(ctx, "bpe-train", &[corpus]);
    }
    let paths = sorted_inputs(corpus, &["ecgb", "csv", "sym"])?;
    let sequences: CliResult<Vec<SymbolSequence>> = paths
        .par_iter()
        .map(|path| load_symbols(path, ctx.config.csv_fs))
        .collect();
    let vocab = train_bpe(&sequences?, &cfg)?;
    vocab.save(create_file(vocab_out)?)?;
    log::info!(
        "trained vocabulary of {} tokens from {} sequences -> {}",
        vocab.size(),
        paths.len(),
        vocab_out.display()
    );
    Ok(())
}

pub fn encode_cmd(ctx: &Ctx, input: &Path, vocab_path: &Path, output: &Path) -> CliResult<()> {
    if ctx.validate {
        return confirm_only(ctx, "encode", &[input, vocab_path]);
    }
    let vocab = BpeVocab::load(open_file(vocab_path)?)?;
    let paths = sorted_inputs(input, &["ecgb", "csv", "sym"])?;
    create_out_dir(output)?;
    let encoded: CliResult<Vec<_>> = paths
        .par_iter()
        .map(|path| {
            let symbols = load_symbols(path, ctx.config.csv_fs)?;
            let tokens = encode(&symbols, &vocab)
                .map_err(|e| CliError::from(e).context(format!("encoding {}", path.display())))?;
            Ok((stem(path), symbols, tokens))
        })
        .collect();
    let encoded = encoded?;
    let mut total_ids = 0usize;
    for (name, symbols, tokens) in &encoded {
        write_symbols(symbols, create_file(&output.join(format!("{name}.sym")))?)?;
        write_tokens(tokens, create_file(&output.join(format!("{name}.tok")))?)?;
        total_ids += tokens.ids.len();
    }
    log::info!(
        "encoded {} sequences into {total_ids} tokens -> {}",
        encoded.len(),
        output.display()
    );
    Ok(())
}

pub fn decode_cmd(ctx: &Ctx, input: &Path, vocab_path: &Path, output: &Path) -> CliResult<()> {
    if ctx.validate {
        return confirm_only(ctx, "decode", &[input, vocab_path]);
    }
    let vocab = BpeVocab::load(open_file(vocab_path)?)?;
    let paths = sorted_inputs(input, &["tok"])?;
    create_out_dir(output)?;
    let decoded: CliResult<Vec<_>> = paths
        .par_iter()
        .map(|path| {
            let tokens = read_tokens(open_file(path)?)
                .map_err(|e| CliError::from(e).context(format!("reading {}", path.display())))?;
            let symbols = decode(&tokens, &vocab)
                .map_err(|e| CliError::from(e).context(format!("decoding {}", path.display())))?;
            Ok((stem(path), symbols))
        })
        .collect();
    let decoded = decoded?;
    for (name, symbols) in &decoded {
        write_symbols(symbols, create_file(&output.join(format!("{name}.sym")))?)?;
    }
    log::info!("decoded {} token files -> {}", decoded.len(), output.display());
    Ok(())
}

pub fn render(
    ctx: &Ctx,
    input: &Path,
    output: &Path,
    width: Option<usize>,
    height: Option<usize>,
) -> CliResult<()> {
    let mut cfg = ctx.config.render.clone();
    if let Some(v) = width {
        cfg.width = v;
    }
    if let Some(v) = height {
        cfg.height = v;
    }
    if ctx.validate {
        return confirm_only(ctx, "render", &[input]);
    }
    let paths = sorted_inputs(input, &["ecgb", "csv"])?;
    create_out_dir(output)?;
    let images: CliResult<Vec<_>> = paths
        .par_iter()
        .map(|path| {
            let record = read_any_record(path, ctx.config.csv_fs)?;
            let image = render_plot(&record, &cfg)
                .map_err(|e| CliError::from(e).context(format!("rendering {}", path.display())))?;
            Ok((stem(path), image))
        })
        .collect();
    let images = images?;
    for (name, image) in &images {
        image.write_png(create_file(&output.join(format!("{name}.png")))?)?;
    }
    log::info!(
        "rendered {} plots at {}x{} -> {}",
        images.len(),
        cfg.width,
        cfg.height,
        output.display()
    );
    Ok(())
}

pub fn stack(ctx: &Ctx, input: &Path, output: &Path) -> CliResult<()> {
    if ctx.validate {
        return confirm_only(ctx, "stack", &[input]);
    }
    let paths = sorted_inputs(input, &["ecgb", "csv"])?;
    create_out_dir(output)?;
    let stacked: CliResult<Vec<_>> = paths
        .par_iter()
        .map(|path| {
            let record = read_any_record(path, ctx.config.csv_fs)?;
            Ok((stem(path), stack_signal(&record)))
        })
        .collect();
    let stacked = stacked?;
    for (name, tensor) in &stacked {
        write_stacked(tensor, create_file(&output.join(format!("{name}.ecgt")))?)?;
    }
    log::info!("stacked {} records -> {}", stacked.len(), output.display());
    Ok(())
}

pub fn perturb_cmd(ctx: &Ctx, input: &Path, output: &Path, seed: Option<u64>) -> CliResult<()> {
    let seed = seed.unwrap_or(ctx.config.seed);
    let cfg = ctx.config.perturb.clone();
    if ctx.validate {
        return confirm_only(ctx, "perturb", &[input]);
    }
    let paths = sorted_inputs(input, &["ecgb", "csv"])?;
    create_out_dir(output)?;
    // The record's position in the sorted list keys its RNG stream, so the
    // same corpus and seed always reproduce the same draws per file.
    let perturbed: CliResult<Vec<_>> = paths
        .par_iter()
        .enumerate()
        .map(|(index, path)| {
            let record = read_any_record(path, ctx.config.csv_fs)?;
            let (out, flags) = perturb_indexed(&record, &cfg, seed, index as u64)
                .map_err(|e| CliError::from(e).context(format!("perturbing {}", path.display())))?;
            Ok((stem(path), out, flags))
        })
        .collect();
    let perturbed = perturbed?;
    let (mut noised, mut wandered) = (0usize, 0usize);
    for (name, record, flags) in &perturbed {
        write_record(record, &output.join(format!("{name}.ecgb")), RecordFormat::EcgbV1)?;
        noised += flags.noise as usize;
        wandered += flags.wander as usize;
    }
    log::info!(
        "perturbed {} records with seed {seed}: noise on {noised}, wander on {wandered}",
        perturbed.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn assemble(
    ctx: &Ctx,
    conversations: &Path,
    output: &Path,
    signals: Option<&Path>,
    template: Option<&str>,
    budget: Option<usize>,
    mode: Option<AssembleMode>,
    min_signal: Option<usize>,
) -> CliResult<()> {
    let mut cfg = ctx.config.assemble.clone();
    if let Some(v) = template {
        cfg.template = v.to_string();
    }
    if let Some(v) = budget {
        cfg.budget = v;
    }
    if let Some(v) = mode {
        cfg.mode = v;
    }
    if let Some(v) = min_signal {
        cfg.min_signal = v;
    }
    let template: ChatTemplate = cfg.template.parse()?;
    if ctx.validate {
        let mut inputs = vec![conversations];
        if let Some(dir) = signals {
            inputs.push(dir);
        }
        return confirm_only(ctx, "assemble", &inputs);
    }
    let convs = read_conversations(open_file(conversations)?)?;
    if convs.is_empty() {
        return Err(CliError::validation(anyhow!(
            "no conversations in {}",
            conversations.display()
        )));
    }
    if cfg.mode == AssembleMode::Tokenized && signals.is_none() {
        return Err(CliError::validation(anyhow!(
            "tokenized mode needs --signals pointing at the token directory"
        )));
    }
    let tokenizer = WhitespaceTokenizer::for_template(template);
    let mut samples = Vec::with_capacity(convs.len());
    // Serial on purpose: the tokenizer interns new words in first-seen
    // order, which fixes the id assignment across runs.
    for conv in &convs {
        let wrap =
            |e: ecgkit::Error| CliError::from(e).context(format!("conversation {}", conv.id));
        let sample = match cfg.mode {
            AssembleMode::Latent => {
                assemble_latent(conv, template, &tokenizer, cfg.budget).map_err(wrap)?
            }
            AssembleMode::Tokenized => {
                let reference = conv.signal_ref.as_deref().ok_or_else(|| {
                    CliError::validation(anyhow!(
                        "conversation {} has no signal_ref but mode is tokenized",
                        conv.id
                    ))
                })?;
                let token_path = signals.unwrap().join(reference);
                let signal = read_tokens(open_file(&token_path)?)
                    .map_err(|e| CliError::from(e).context(format!("reading {}", token_path.display())))?;
                assemble_tokenized(conv, template, &tokenizer, &signal, cfg.budget, cfg.min_signal)
                    .map_err(wrap)?
            }
        };
        samples.push(sample);
    }
    let degenerate = samples.iter().filter(|s| s.degenerate).count();
    write_samples(&samples, create_file(output)?)?;
    log::info!(
        "assembled {} samples (template {}, budget {}, {} degenerate) -> {}",
        samples.len(),
        template.name(),
        cfg.budget,
        degenerate,
        output.display()
    );
    Ok(())
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(anyhow!("reading {}: {e}", path.display())))?;
    Ok(text.lines().map(String::from).collect())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    ctx: &Ctx,
    candidates: &Path,
    references: &Path,
    output: &Path,
    dataset: &str,
    model: &str,
    seed: u64,
    append: bool,
) -> CliResult<()> {
    if ctx.validate {
        return confirm_only(ctx, "evaluate", &[candidates, references]);
    }
    let cand_lines = read_lines(candidates)?;
    let ref_lines = read_lines(references)?;
    if cand_lines.len() != ref_lines.len() {
        return Err(CliError::validation(anyhow!(
            "{} candidates vs {} references; the files must be line-aligned",
            cand_lines.len(),
            ref_lines.len()
        )));
    }
    if cand_lines.is_empty() {
        return Err(CliError::validation(anyhow!("no candidate/reference pairs")));
    }
    let metric_cfg = ctx.config.eval.metric_config();
    let per_pair: Vec<(f64, f64, f64)> = cand_lines
        .par_iter()
        .zip(ref_lines.par_iter())
        .map(|(c, r)| {
            let ct = tokenize_for_metrics(c, &metric_cfg);
            let rt = tokenize_for_metrics(r, &metric_cfg);
            (bleu4(&ct, &rt), rouge_l(&ct, &rt), meteor_simplified(&ct, &rt))
        })
        .collect();
    let n = per_pair.len() as f64;
    let mean = |pick: fn(&(f64, f64, f64)) -> f64| per_pair.iter().map(pick).sum::<f64>() / n;
    let scores = [
        ("bleu4", mean(|t| t.0)),
        ("rougel", mean(|t| t.1)),
        ("meteor", mean(|t| t.2)),
        ("accuracy", accuracy(&cand_lines, &ref_lines)?),
    ];
    let mut rows: Vec<ScoreRow> = Vec::new();
    if append && output.exists() {
        rows = read_scores(output)?;
    }
    for (metric, value) in scores {
        rows.push(ScoreRow {
            dataset: dataset.to_string(),
            model: model.to_string(),
            metric: metric.to_string(),
            seed,
            value,
        });
        println!("{metric}={value:.4}");
    }
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            create_out_dir(parent)?;
        }
    }
    write_scores(output, &rows)?;
    log::info!(
        "scored {} pairs for {dataset}/{model} seed {seed} -> {}",
        per_pair.len(),
        output.display()
    );
    Ok(())
}

pub fn significance(
    ctx: &Ctx,
    scores: &Path,
    output: &Path,
    alpha: Option<f64>,
) -> CliResult<()> {
    let alpha = alpha.unwrap_or(ctx.config.eval.alpha);
    if ctx.validate {
        return confirm_only(ctx, "significance", &[scores]);
    }
    let rows = read_scores(scores)?;
    let reports = cell_reports(&rows, alpha)?;
    let wins = count_significant_wins(&rows, alpha)?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            create_out_dir(parent)?;
        }
    }
    write_wins(output, &wins)?;
    println!("dataset\tmetric\ttop\trunner_up\tt\tp\tsignificant");
    for r in &reports {
        println!(
            "{}\t{}\t{}\t{}\t{:.4}\t{:.6}\t{}",
            r.dataset, r.metric, r.top, r.runner_up, r.t, r.p, r.significant
        );
    }
    let significant = reports.iter().filter(|r| r.significant).count();
    log::info!(
        "{significant}/{} cells significant at alpha {alpha}; win counts -> {}",
        reports.len(),
        output.display()
    );
    Ok(())
}

pub fn radar(ctx: &Ctx, scores: &Path, output: &Path) -> CliResult<()> {
    if ctx.validate {
        return confirm_only(ctx, "radar", &[scores]);
    }
    let rows = read_scores(scores)?;
    let table = normalize_radar(&rows)?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            create_out_dir(parent)?;
        }
    }
    write_radar(output, &table.rows)?;
    log::info!(
        "normalized {} rows ({} constant cells) -> {}",
        table.rows.len(),
        table.constant_cells.len(),
        output.display()
    );
    Ok(())
}

/// Build one synthetic 12-lead record: QRS-like wavelets on a drifting
/// baseline with powerline hum and measurement noise, so the preprocessing
/// stages all have something to do.
fn synthesize_record(seed: u64, index: u64, fs: f64, seconds: f64) -> CliResult<EcgRecord> {
    use rand::Rng as _;
    let mut rng = record_rng(seed, index);
    let samples = (fs * seconds).round() as usize;
    if samples == 0 {
        return Err(CliError::validation(anyhow!(
            "fs {fs} and duration {seconds}s give an empty record"
        )));
    }
    let heart_rate: f64 = rng.gen_range(55.0..95.0);
    let beat_period = 60.0 / heart_rate;
    let first_beat: f64 = rng.gen_range(0.1..0.1 + beat_period);
    let drift_freq: f64 = rng.gen_range(0.15..0.45);
    let drift_phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut rows = Vec::with_capacity(12);
    for _ in CANONICAL_LEADS {
        let gain: f64 = rng.gen_range(0.5..1.5);
        let drift_amp: f64 = rng.gen_range(0.05..0.15);
        let hum_amp: f64 = rng.gen_range(0.01..0.04);
        let noise_sd: f64 = rng.gen_range(0.005..0.02);
        let qrs_width: f64 = rng.gen_range(0.02..0.04);
        let mut row = Vec::with_capacity(samples);
        for i in 0..samples {
            let t = i as f64 / fs;
            let drift = drift_amp
                * (std::f64::consts::TAU * drift_freq * t + drift_phase).sin();
            let hum = hum_amp * (std::f64::consts::TAU * 50.0 * t).sin();
            // Nearest beat center; a Mexican-hat pulse stands in for QRS.
            let phase = (t - first_beat) / beat_period;
            let nearest = first_beat + phase.round() * beat_period;
            let u = (t - nearest) / qrs_width;
            let qrs = gain * (1.0 - u * u) * (-0.5 * u * u).exp();
            let noise: f64 = rng.gen_range(-1.0..1.0) * noise_sd;
            row.push(drift + hum + qrs + noise);
        }
        rows.push(row);
    }
    EcgRecord::new(CANONICAL_LEADS.to_vec(), fs, rows).map_err(CliError::from)
}

pub fn synth(
    ctx: &Ctx,
    output: &Path,
    count: usize,
    seed: Option<u64>,
    fs: f64,
    seconds: f64,
) -> CliResult<()> {
    let seed = seed.unwrap_or(ctx.config.seed);
    if ctx.validate {
        return confirm_only(ctx, "synth", &[]);
    }
    if count == 0 {
        return Err(CliError::validation(anyhow!("count must be at least 1")));
    }
    create_out_dir(output)?;
    let records: CliResult<Vec<EcgRecord>> = (0..count)
        .into_par_iter()
        .map(|i| synthesize_record(seed, i as u64, fs, seconds))
        .collect();
    for (i, record) in records?.iter().enumerate() {
        let path = output.join(format!("rec_{i:04}.ecgb"));
        write_record(record, &path, RecordFormat::EcgbV1)?;
    }
    log::info!(
        "synthesized {count} records ({seconds}s at {fs} Hz, seed {seed}) -> {}",
        output.display()
    );
    Ok(())
}
