mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;
use config::Config;

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, 2) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .target(env_logger::Target::Stderr)
        .init();
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let cfg = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Encode(a) => commands::encode(a, &cfg),
        Command::Decode(a) => commands::decode(a, &cfg),
        Command::Validate(a) => commands::validate(a),
        Command::Assemble(a) => commands::assemble(a, &cfg),
        Command::Evaluate(a) => commands::evaluate(a, &cfg),
        Command::Stats(a) => commands::stats(a, &cfg),
        Command::Synth(a) => commands::synth(a, &cfg),
        Command::Sweep(a) => commands::sweep(a, &cfg),
        Command::Vocab(a) => commands::vocab(a),
    }
}

/// The reader of our stdout went away, as with `| head`.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .and_then(|j| j.io_error_kind())
                .is_some_and(|k| k == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version go to stdout with status 0, usage errors to stderr with 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_logging(&cli);
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
