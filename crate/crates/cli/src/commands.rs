use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tabrec_core::assemble::AssembleOptions;
use tabrec_core::dataset::model_output::PredictedStructure;
use tabrec_core::dataset::{
    dataset_stats, model_outputs, read_size_table, AnnotationReader, ModelOutputRecord, ReadMode, StatsOptions,
};
use tabrec_core::geometry::ImageSize;
use tabrec_core::pipeline::{run_record, PipelineConfig};
use tabrec_core::structure::{
    build_vocabulary, decode_to_skeleton, encode_annotation, encode_tokens, validate_sequence, CodecError,
    EmptyFormTable, EncodeOptions, Severity,
};
use tabrec_core::synth::{degradation_sweep, generate_table, simulate_outputs, write_tsv, SweepGrid, SynthParams};
use tabrec_core::table::to_html;
use tabrec_core::teds::{evaluate_maps, parse_html_map, BatchSummary};

use crate::args::*;
use crate::config::{open_input, open_output, read_text, write_json_line, Config};

/// How a command that ran to completion turned out.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// The input failed a check; maps to exit status 1.
    Failed,
}

/// Token symbols and per-anchor boxes.
type Structure = (Vec<String>, Vec<Option<[f64; 4]>>);

#[derive(Serialize)]
struct HtmlLine<'a> {
    filename: &'a str,
    html: &'a str,
}

fn jobs(flag: Option<usize>, cfg: &Config) -> usize {
    match flag.unwrap_or(cfg.jobs) {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
}

fn sizes(path: Option<&Path>) -> Result<HashMap<String, ImageSize>> {
    match path {
        Some(p) => read_size_table(open_input(p)?).with_context(|| format!("reading sizes from {}", p.display())),
        None => Ok(HashMap::new()),
    }
}

/// Logs a skipped record, or fails in strict mode.
fn skip(strict: bool, what: impl std::fmt::Display) -> Result<()> {
    if strict {
        bail!("{what}");
    }
    log::warn!("skipping {what}");
    Ok(())
}

pub fn encode(a: &EncodeArgs, cfg: &Config) -> Result<Outcome> {
    let forms = cfg.forms(a.forms.empty_form_table.as_deref())?;
    let sizes = sizes(a.sizes.as_deref())?;
    let strict = a.strict || cfg.strict;
    let opts = EncodeOptions {
        max_len: a.max_len.unwrap_or(cfg.max_len),
        unknown_empty_as_form0: false,
    };
    let mode = if strict { ReadMode::Strict } else { ReadMode::Lenient };
    let mut out = open_output(&a.io.output)?;
    let (mut written, mut skipped, mut no_size) = (0usize, 0usize, 0usize);
    for item in AnnotationReader::new(open_input(&a.io.input)?, mode) {
        let record = match item {
            Ok(r) => r,
            Err(e) => {
                skip(strict, format!("annotation {e}"))?;
                skipped += 1;
                continue;
            }
        };
        let size = sizes.get(&record.filename).copied().or_else(|| record.image_size());
        let encoded: Result<Structure, CodecError> = match size {
            Some(size) => encode_annotation(&record, size, &forms, &opts).map(|e| {
                let boxes = e
                    .sequence
                    .anchor_boxes()
                    .iter()
                    .map(|b| b.map(|b| b.to_array()))
                    .collect();
                (e.sequence.symbols(), boxes)
            }),
            None => {
                no_size += 1;
                encode_tokens(&record, &forms, &opts).and_then(|(tokens, anchors, _)| {
                    if tokens.len() > opts.max_len {
                        return Err(CodecError::LengthExceeded {
                            len: tokens.len(),
                            max_len: opts.max_len,
                        });
                    }
                    Ok((tokens.iter().map(|t| t.symbol()).collect(), vec![None; anchors.len()]))
                })
            }
        };
        match encoded {
            Ok((tokens, boxes)) => {
                let rec = ModelOutputRecord {
                    filename: record.filename.clone(),
                    structure: PredictedStructure { tokens, boxes },
                    text_lines: vec![],
                    image_size: size.map(|s| [s.width, s.height]),
                };
                write_json_line(&mut out, &rec)?;
                written += 1;
            }
            Err(e) => {
                skip(strict, format!("{}: {e}", record.filename))?;
                skipped += 1;
            }
        }
    }
    out.flush()?;
    if no_size > 0 {
        log::warn!("{no_size} records had no image size; their boxes are null");
    }
    log::info!("encoded {written} records, skipped {skipped}");
    Ok(Outcome::Ok)
}

pub fn decode(a: &DecodeArgs, cfg: &Config) -> Result<Outcome> {
    let vocab = build_vocabulary();
    let max_len = a.max_len.unwrap_or(cfg.max_len);
    let strict = a.strict || cfg.strict;
    let mut out = open_output(&a.io.output)?;
    for item in model_outputs(open_input(&a.io.input)?, &vocab) {
        let skeleton = item.map_err(anyhow::Error::from).and_then(|r| {
            let seq = r.sequence(&vocab, max_len)?;
            let (tree, _) = decode_to_skeleton(&seq).with_context(|| r.filename.clone())?;
            Ok((r.filename, to_html(&tree)))
        });
        match skeleton {
            Ok((filename, html)) => write_json_line(
                &mut out,
                &HtmlLine {
                    filename: &filename,
                    html: &html,
                },
            )?,
            Err(e) => skip(strict, format!("{e:#}"))?,
        }
    }
    out.flush()?;
    Ok(Outcome::Ok)
}

pub fn validate(a: &ValidateArgs) -> Result<Outcome> {
    let vocab = build_vocabulary();
    let mut out = open_output(&a.io.output)?;
    let (mut records, mut bad) = (0usize, 0usize);
    for item in model_outputs(open_input(&a.io.input)?, &vocab) {
        records += 1;
        let record = match item {
            Ok(r) => r,
            Err(e) => {
                bad += 1;
                writeln!(out, "{e}")?;
                continue;
            }
        };
        let tokens = record.validate(&vocab)?;
        let violations = validate_sequence(&tokens);
        let mut fatal = false;
        for v in &violations {
            fatal |= v.severity == Severity::Fatal;
            if v.severity == Severity::Fatal || a.warnings {
                writeln!(out, "{}: {v}", record.filename)?;
            }
        }
        bad += usize::from(fatal);
    }
    out.flush()?;
    if bad > 0 {
        log::error!("{bad} of {records} records are invalid");
        Ok(Outcome::Failed)
    } else {
        log::info!("{records} records valid");
        Ok(Outcome::Ok)
    }
}

pub fn assemble(a: &AssembleArgs, cfg: &Config) -> Result<Outcome> {
    let vocab = build_vocabulary();
    let sizes = sizes(a.sizes.as_deref())?;
    let strict = a.strict || cfg.strict;
    let pipeline = PipelineConfig {
        vocab: vocab.clone(),
        max_len: a.max_len.unwrap_or(cfg.max_len),
        assign: cfg.assign,
        assemble: AssembleOptions {
            format_correction: a.format_correction.unwrap_or(cfg.format_correction),
            forms: cfg.forms(a.forms.empty_form_table.as_deref())?,
        },
    };
    let mut out = open_output(&a.io.output)?;
    let (mut written, mut skipped) = (0usize, 0usize);
    for item in model_outputs(open_input(&a.io.input)?, &vocab) {
        let result = item.map_err(anyhow::Error::from).and_then(|r| {
            let size = sizes.get(&r.filename).copied();
            let res = run_record(&r, size, &pipeline)?;
            Ok((r.filename, res.html))
        });
        match result {
            Ok((filename, html)) => {
                write_json_line(
                    &mut out,
                    &HtmlLine {
                        filename: &filename,
                        html: &html,
                    },
                )?;
                written += 1;
            }
            Err(e) => {
                skip(strict, format!("{e:#}"))?;
                skipped += 1;
            }
        }
    }
    out.flush()?;
    log::info!("assembled {written} tables, skipped {skipped}");
    Ok(Outcome::Ok)
}

pub fn evaluate(a: &EvaluateArgs, cfg: &Config) -> Result<Outcome> {
    if a.pred.as_os_str() == "-" && a.gt.as_os_str() == "-" {
        bail!("--pred and --gt cannot both be standard input");
    }
    // predictions first: when they arrive on a pipe, the upstream commands
    // that write the ground truth have finished once stdin closes
    let pred = parse_html_map(&read_text(&a.pred)?, &a.pred)?;
    let gt = parse_html_map(&read_text(&a.gt)?, &a.gt)?;
    let summary = evaluate_maps(&pred, &gt, a.struct_only, jobs(a.jobs, cfg))?.rounded();
    log::info!("mean TEDS {:.4} over {} samples", summary.mean, summary.n);
    let report = if a.summary_only {
        BatchSummary {
            per_sample: vec![],
            ..summary
        }
    } else {
        summary
    };
    let mut out = open_output(&a.output)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(Outcome::Ok)
}

pub fn stats(a: &StatsArgs, cfg: &Config) -> Result<Outcome> {
    let forms = cfg.forms(a.forms.empty_form_table.as_deref())?;
    let s = &cfg.stats;
    let opts = StatsOptions {
        length_limit: a.length_limit.unwrap_or(s.length_limit),
        bin_width: s.bin_width,
        long_cell_chars: s.long_cell_chars,
        top_k: a.top_k.unwrap_or(s.top_k),
    };
    let (acc, skipped) = dataset_stats(open_input(&a.input)?, &forms, &opts);
    let mut report = acc.report(&opts);
    report.skipped_lines = skipped;
    print!("{report}");
    if let Some(p) = &a.out {
        let mut out = open_output(p)?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        out.flush()?;
    }
    if let Some(p) = &a.discover_forms {
        let table = acc.discover_forms()?;
        std::fs::write(p, table.to_toml()).with_context(|| format!("writing {}", p.display()))?;
        log::info!("empty-form table written to {}", p.display());
    }
    Ok(Outcome::Ok)
}

fn synth_params(cfg: &Config, noise: &Noise) -> SynthParams {
    let mut p = cfg.synth.clone();
    if let Some(s) = noise.seed {
        p.seed = s;
    }
    if let Some(j) = noise.jitter {
        p.jitter_sigma = j;
    }
    if let Some(d) = noise.drop {
        p.drop_prob = d;
    }
    p
}

pub fn synth(a: &SynthArgs, cfg: &Config) -> Result<Outcome> {
    let forms: EmptyFormTable = cfg.forms(a.forms.empty_form_table.as_deref())?;
    let base = synth_params(cfg, &a.noise);
    base.validate()?;
    let mut annotations = a.annotations.as_deref().map(open_output).transpose()?;
    let mut outputs = open_output(&a.outputs)?;
    for i in 0..a.count {
        let p = SynthParams {
            seed: base.seed.wrapping_add(i),
            ..base.clone()
        };
        let (record, layout) = generate_table(&p, &forms)?;
        if let Some(out) = annotations.as_mut() {
            write_json_line(out, &record)?;
        }
        write_json_line(&mut outputs, &simulate_outputs(&record, &layout, &p, &forms)?)?;
    }
    if let Some(out) = annotations.as_mut() {
        out.flush()?;
    }
    outputs.flush()?;
    log::info!("generated {} tables from seed {}", a.count, base.seed);
    Ok(Outcome::Ok)
}

pub fn sweep(a: &SweepArgs, cfg: &Config) -> Result<Outcome> {
    let forms = cfg.forms(a.forms.empty_form_table.as_deref())?;
    let mut base = cfg.synth.clone();
    if let Some(s) = a.seed {
        base.seed = s;
    }
    let grid = SweepGrid {
        jitter: a.jitter.clone(),
        drop: a.drop.clone(),
        seeds: a.seeds,
    };
    let pipeline = PipelineConfig {
        assign: cfg.assign,
        assemble: AssembleOptions {
            format_correction: cfg.format_correction,
            forms: forms.clone(),
        },
        ..PipelineConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs(a.jobs, cfg)).build()?;
    let rows = pool.install(|| degradation_sweep(&base, &grid, &forms, &pipeline))?;
    let mut out = open_output(&a.output)?;
    write_tsv(&rows, &mut out)?;
    out.flush()?;
    Ok(Outcome::Ok)
}

pub fn vocab(a: &VocabArgs) -> Result<Outcome> {
    let mut out = open_output(&a.output)?;
    build_vocabulary().write_to(&mut out)?;
    out.flush()?;
    Ok(Outcome::Ok)
}
