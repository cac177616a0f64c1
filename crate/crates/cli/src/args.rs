use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Table recognition toolkit: structure tokens, text-line assignment,
/// HTML assembly, TEDS scoring and synthetic data.
///
/// Paths given as `-` mean standard input or output. Logs go to standard
/// error; set RUST_LOG or use -v/-q to change verbosity.
#[derive(Debug, Parser)]
#[command(name = "tabrec", version)]
pub struct Cli {
    /// TOML config file. Flags given on the command line take precedence.
    #[arg(long, global = true, env = "TABREC_CONFIG")]
    pub config: Option<PathBuf>,

    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotation records to structure-token files.
    Encode(EncodeArgs),
    /// Structure-token files to skeleton HTML (no cell text).
    Decode(DecodeArgs),
    /// Grammar check of structure-token files. Exits 1 on any fatal violation.
    Validate(ValidateArgs),
    /// Model outputs to final HTML.
    Assemble(AssembleArgs),
    /// TEDS of predicted HTML against ground truth.
    Evaluate(EvaluateArgs),
    /// Statistics of an annotation file, with empty-form discovery.
    Stats(StatsArgs),
    /// Synthetic annotations and matching simulated model outputs.
    Synth(SynthArgs),
    /// Mean TEDS over a grid of jitter and drop levels on synthetic tables.
    Sweep(SweepArgs),
    /// Print the structure alphabet, one symbol per line, line number = id.
    Vocab(VocabArgs),
}

#[derive(Debug, Args)]
pub struct Forms {
    /// Empty-form table (TOML) instead of the built-in one [config: empty_form_table].
    #[arg(long, value_name = "PATH")]
    pub empty_form_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Input file, `-` for standard input.
    #[arg(short, long, default_value = "-")]
    pub input: PathBuf,
    /// Output file, `-` for standard output.
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub io: Input,
    #[command(flatten)]
    pub forms: Forms,
    /// CSV of `filename,width,height` for records without an image size.
    #[arg(long, value_name = "PATH")]
    pub sizes: Option<PathBuf>,
    /// Longest sequence accepted [config: max_len, default 500].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Stop at the first bad record instead of skipping it [config: strict].
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub io: Input,
    /// Longest sequence accepted [config: max_len, default 500].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Stop at the first bad record instead of skipping it [config: strict].
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub io: Input,
    /// Also list warnings.
    #[arg(long)]
    pub warnings: bool,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[command(flatten)]
    pub io: Input,
    #[command(flatten)]
    pub forms: Forms,
    /// Wrap header text in bold [config: format_correction, default true].
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    pub format_correction: Option<bool>,
    /// CSV of `filename,width,height`; overrides sizes in the records.
    #[arg(long, value_name = "PATH")]
    pub sizes: Option<PathBuf>,
    /// Longest sequence accepted [config: max_len, default 500].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Stop at the first bad record instead of skipping it [config: strict].
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions: JSON lines of `{filename, html}`, annotation records, or
    /// one JSON object mapping filename to HTML.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth, in any of the same layouts.
    #[arg(long)]
    pub gt: PathBuf,
    /// Ignore cell text.
    #[arg(long)]
    pub struct_only: bool,
    /// Worker threads, 0 for one per core [config: jobs, default 0].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Leave per-sample scores out of the report.
    #[arg(long)]
    pub summary_only: bool,
    /// JSON report destination.
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Annotation file, `-` for standard input.
    #[arg(short, long, default_value = "-")]
    pub input: PathBuf,
    #[command(flatten)]
    pub forms: Forms,
    /// Write the report as JSON here; the table still goes to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write an empty-form table derived from the file's markups here.
    #[arg(long, value_name = "PATH")]
    pub discover_forms: Option<PathBuf>,
    /// Sequences shorter than this count as below the limit [config: stats.length_limit, default 500].
    #[arg(long)]
    pub length_limit: Option<usize>,
    /// Empty-cell markups listed [config: stats.top_k, default 20].
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Noise {
    /// First seed [config: synth.seed].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Box jitter standard deviation in pixels [config: synth.jitter_sigma].
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Probability of dropping each text line [config: synth.drop_prob].
    #[arg(long)]
    pub drop: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub noise: Noise,
    #[command(flatten)]
    pub forms: Forms,
    /// Tables to generate.
    #[arg(long, default_value_t = 100)]
    pub count: u64,
    /// Ground-truth annotation records go here; not written when absent.
    #[arg(long, value_name = "PATH")]
    pub annotations: Option<PathBuf>,
    /// Simulated model outputs go here.
    #[arg(long, value_name = "PATH", default_value = "-")]
    pub outputs: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub forms: Forms,
    /// Comma-separated jitter levels in pixels.
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,8")]
    pub jitter: Vec<f64>,
    /// Comma-separated drop probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.4")]
    pub drop: Vec<f64>,
    /// Tables per grid point.
    #[arg(long, default_value_t = 200)]
    pub seeds: u64,
    /// First seed [config: synth.seed].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core [config: jobs, default 0].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// TSV destination.
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    /// Output file, `-` for standard output.
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}
